use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn binom_u64(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

fn binom_big(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn check_kl(k: u64, l: u64) -> Result<()> {
    if l < 1 || l > k {
        return Err(Error::invalid("l", format!("need 1 ≤ l ≤ k, got k = {k}, l = {l}")));
    }
    Ok(())
}

/// `S_{k,l}` when it fits in 64 bits.
pub fn narayana_u64(k: u64, l: u64) -> Result<Option<u64>> {
    check_kl(k, l)?;
    let a = binom_u64(k - 1, l - 1);
    let b = binom_u64(k, l - 1);
    Ok(match (a, b) {
        (Some(a), Some(b)) => (a as u128 * b as u128 / l as u128).try_into().ok(),
        _ => None,
    })
}

/// Number of rooted plane trees with `k` edges and `l` leaves.
pub fn narayana(k: u64, l: u64) -> Result<BigUint> {
    if let Some(v) = narayana_u64(k, l)? {
        return Ok(BigUint::from(v));
    }
    Ok(binom_big(k - 1, l - 1) * binom_big(k, l - 1) / l)
}

pub fn catalan(k: u64) -> BigUint {
    binom_big(2 * k, k) / (k + 1)
}

/// Rooted plane tree given by parent pointers; vertex 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneTree {
    parent: Vec<usize>,
}

impl PlaneTree {
    /// Tree traced by a Dyck word (`true` = step away from the root).
    pub fn from_dyck(word: &[bool]) -> Result<Self> {
        let mut parent = vec![0];
        let mut stack = vec![0usize];
        for &up in word {
            if up {
                let v = parent.len();
                parent.push(*stack.last().unwrap());
                stack.push(v);
            } else {
                if stack.len() == 1 {
                    return Err(Error::invalid("dyck word", "walk goes below the root"));
                }
                stack.pop();
            }
        }
        if stack.len() != 1 {
            return Err(Error::invalid("dyck word", "walk does not return to the root"));
        }
        Ok(PlaneTree { parent })
    }

    pub fn edges(&self) -> usize {
        self.parent.len() - 1
    }

    fn child_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.parent.len()];
        for v in 1..self.parent.len() {
            c[self.parent[v]] += 1;
        }
        c
    }

    pub fn leaves(&self) -> usize {
        if self.edges() == 0 {
            return 0;
        }
        self.child_counts().iter().skip(1).filter(|&&c| c == 0).count()
    }

    /// Every edge touches the root.
    pub fn is_degenerate(&self) -> bool {
        self.parent.iter().skip(1).all(|&p| p == 0)
    }

    /// `(free, bound)` leaf counts: one free leaf per non-root vertex that
    /// carries leaves, every other leaf bound.
    pub fn leaf_types(&self) -> (usize, usize) {
        let children = self.child_counts();
        let mut carries = vec![false; self.parent.len()];
        let mut leaves = 0;
        for v in 1..self.parent.len() {
            if children[v] == 0 {
                leaves += 1;
                carries[self.parent[v]] = true;
            }
        }
        let free = carries.iter().skip(1).filter(|&&c| c).count();
        (free, leaves - free)
    }
}

/// All Dyck words of semilength `k`, lexicographic with up-steps first.
pub fn dyck_words(k: usize) -> Vec<Vec<bool>> {
    fn rec(k: usize, up: usize, down: usize, cur: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
        if down == k {
            out.push(cur.clone());
            return;
        }
        if up < k {
            cur.push(true);
            rec(k, up + 1, down, cur, out);
            cur.pop();
        }
        if down < up {
            cur.push(false);
            rec(k, up, down + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, 0, 0, &mut Vec::new(), &mut out);
    out
}

pub fn plane_trees(k: usize) -> Vec<PlaneTree> {
    dyck_words(k).iter().map(|w| PlaneTree::from_dyck(w).unwrap()).collect()
}

pub const MAX_BOUGH_EDGES: usize = 10;

/// Leaf-count histogram of plane trees with `k` edges, index `l`.
pub fn leaf_histogram(k: usize) -> Result<Vec<u64>> {
    if k > MAX_BOUGH_EDGES + 2 {
        return Err(Error::SizeCap(format!("tree enumeration capped at {} edges", MAX_BOUGH_EDGES + 2)));
    }
    let mut h = vec![0u64; k + 1];
    for t in plane_trees(k) {
        h[t.leaves()] += 1;
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoughCell {
    pub k: usize,
    pub free: usize,
    pub bound: usize,
    pub count: u64,
    pub bound_holds: bool,
}

/// `k^{2f-2} 2^{2f+b}` compared against `count` without fractions.
pub fn bough_bound_holds(k: usize, f: usize, b: usize, count: u64) -> bool {
    let lhs = BigUint::from(count) * BigUint::from(k as u64).pow(2);
    let rhs = BigUint::from(k as u64).pow(2 * f as u32) * BigUint::from(2u32).pow((2 * f + b) as u32);
    lhs <= rhs
}

/// Every nonzero `(f, b)` cell of nondegenerate boughs with `k` edges.
pub fn bough_table(k: usize) -> Result<Vec<BoughCell>> {
    if k > MAX_BOUGH_EDGES {
        return Err(Error::SizeCap(format!("bough enumeration capped at {MAX_BOUGH_EDGES} edges, got {k}")));
    }
    let mut counts = vec![vec![0u64; k + 1]; k + 1];
    for t in plane_trees(k) {
        if t.is_degenerate() {
            continue;
        }
        let (f, b) = t.leaf_types();
        counts[f][b] += 1;
    }
    let mut out = Vec::new();
    for (f, row) in counts.iter().enumerate() {
        for (b, &count) in row.iter().enumerate() {
            if count > 0 {
                out.push(BoughCell { k, free: f, bound: b, count, bound_holds: bough_bound_holds(k, f, b, count) });
            }
        }
    }
    Ok(out)
}

/// `S_{kfb}`: nondegenerate boughs with `k` edges, `f` free and `b` bound leaves.
pub fn count_constrained_boughs(k: usize, f: usize, b: usize) -> Result<u64> {
    Ok(bough_table(k)?
        .into_iter()
        .find(|c| c.free == f && c.bound == b)
        .map_or(0, |c| c.count))
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two stems of lengths `n` and `n'` glued into a cycle of `L = n + n'` edges.
///
/// Vertices are `0..L`; edge `k` joins vertex `k` with vertex `k+1 mod L`.
/// Vertices `0` and `n` (mod `L`) are the special end vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Stems {
    n: usize,
    len: usize,
}

impl Stems {
    pub fn new(n: usize, n_prime: usize) -> Result<Self> {
        let len = n + n_prime;
        if len < 2 {
            return Err(Error::invalid("n + n'", "need at least two edges"));
        }
        Ok(Stems { n, len })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_prime(&self) -> usize {
        self.len - self.n
    }

    /// Number of edges `L`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_special(&self, v: usize) -> bool {
        let v = v % self.len;
        v == 0 || v == self.n % self.len
    }

    /// The two neighbouring edges `e - 1`, `e + 1`.
    pub fn neighbours(&self, e: usize) -> [usize; 2] {
        [(e + self.len - 1) % self.len, (e + 1) % self.len]
    }

    /// Edges sharing a vertex.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        a != b && self.neighbours(a).contains(&b)
    }
}

pub type Bridge = (usize, usize);

pub fn bridge(a: usize, b: usize) -> Bridge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Parallel,
    Antiparallel,
    Neither,
}

/// Classification of `(π, π')` together with the bridge playing the primed
/// role in the matched pattern (`0` for `π`, `1` for `π'`).
fn classify(stems: &Stems, p: Bridge, q: Bridge) -> (Relation, usize) {
    let l = stems.len;
    let set = |a: usize, b: usize| bridge(a % l, b % l);
    for (role, (x, y)) in [(1usize, (p, q)), (0usize, (q, p))] {
        for (a, b) in [(x.0, x.1), (x.1, x.0)] {
            // parallel: x = {i-1, j}, y = {i, j-1}
            let (i, j) = ((a + 1) % l, b);
            if !stems.is_special(i) && !stems.is_special(j) && y == set(i, j + l - 1) {
                return (Relation::Parallel, role);
            }
            // antiparallel: x = {i-1, j-1}, y = {i, j}
            let (i, j) = ((a + 1) % l, (b + 1) % l);
            if !stems.is_special(i) && !stems.is_special(j) && y == set(i, j) {
                return (Relation::Antiparallel, role);
            }
        }
    }
    (Relation::Neither, 0)
}

/// Whether two distinct bridges are parallel, antiparallel or neither.
pub fn detect_parallel(stems: &Stems, p: Bridge, q: Bridge) -> Result<Relation> {
    let (p, q) = (bridge(p.0, p.1), bridge(q.0, q.1));
    for e in [p.0, p.1, q.0, q.1] {
        if e >= stems.len {
            return Err(Error::invalid("bridge", format!("edge {e} out of range")));
        }
    }
    if p.0 == p.1 || q.0 == q.1 {
        return Err(Error::invalid("bridge", "a bridge joins two distinct edges"));
    }
    if p == q {
        return Err(Error::invalid("bridge", "a bridge cannot be compared with itself"));
    }
    if p.0 == q.0 || p.0 == q.1 || p.1 == q.0 || p.1 == q.1 {
        return Err(Error::invalid("bridge", "bridges of a pairing are disjoint"));
    }
    Ok(classify(stems, p, q).0)
}

pub(crate) fn compatible(stems: &Stems, p: Bridge, q: Bridge) -> bool {
    classify(stems, p, q).0 == Relation::Neither
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Straight,
    Twisted,
}

/// A perfect matching of the edges of `stems` with a tag per bridge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedPairing {
    pub stems: Stems,
    pub bridges: Vec<(Bridge, Tag)>,
}

pub fn validate_pairing(stems: &Stems, bridges: &[Bridge]) -> Result<()> {
    let mut seen = vec![false; stems.len];
    for &(a, b) in bridges {
        for e in [a, b] {
            if e >= stems.len || seen[e] {
                return Err(Error::invalid("pairing", format!("edge {e} is missing, repeated or out of range")));
            }
            seen[e] = true;
        }
        if a == b {
            return Err(Error::invalid("pairing", "a bridge joins two distinct edges"));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::invalid("pairing", "not every edge is bridged"));
    }
    Ok(())
}

impl TaggedPairing {
    pub fn new(stems: Stems, bridges: Vec<(Bridge, Tag)>) -> Result<Self> {
        let plain: Vec<Bridge> = bridges.iter().map(|&(b, _)| b).collect();
        validate_pairing(&stems, &plain)?;
        let mut bridges: Vec<(Bridge, Tag)> = bridges.into_iter().map(|((a, b), t)| (bridge(a, b), t)).collect();
        bridges.sort();
        Ok(TaggedPairing { stems, bridges })
    }

    pub fn uniform(stems: Stems, bridges: &[Bridge], tag: Tag) -> Result<Self> {
        TaggedPairing::new(stems, bridges.iter().map(|&b| (b, tag)).collect())
    }

    pub fn size(&self) -> usize {
        self.bridges.len()
    }

    /// Every collapsible pair as `(kept, removed)` bridge positions.
    pub fn collapsible(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.bridges.len() {
            for j in i + 1..self.bridges.len() {
                let (p, tp) = self.bridges[i];
                let (q, tq) = self.bridges[j];
                if tp != tq {
                    continue;
                }
                let (rel, primed) = classify(&self.stems, p, q);
                let ok = matches!(
                    (rel, tp),
                    (Relation::Parallel, Tag::Straight) | (Relation::Antiparallel, Tag::Twisted)
                );
                if ok {
                    out.push(if primed == 1 { (i, j) } else { (j, i) });
                }
            }
        }
        out
    }

    /// Merge the pair by deleting the two edges of the `removed` bridge; the
    /// special vertices are never deleted and the other edges are renumbered.
    pub fn collapse(&self, removed: usize) -> TaggedPairing {
        let (gone, _) = self.bridges[removed];
        let shift = |e: usize| e - usize::from(gone.0 < e) - usize::from(gone.1 < e);
        let len = self.stems.len - 2;
        let n = self.stems.n - usize::from(gone.0 < self.stems.n) - usize::from(gone.1 < self.stems.n);
        let bridges = self
            .bridges
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != removed)
            .map(|(_, &((a, b), t))| (bridge(shift(a), shift(b)), t))
            .collect::<Vec<_>>();
        let mut bridges = bridges;
        bridges.sort();
        TaggedPairing {
            stems: Stems { n, len },
            bridges,
        }
    }

    /// Skeleton, collapsing the first available pair at every step.
    pub fn skeleton(&self) -> TaggedPairing {
        self.skeleton_by(|_| 0)
    }

    /// Skeleton with the collapse order chosen by `pick` among the
    /// currently available pairs.
    pub fn skeleton_by(&self, mut pick: impl FnMut(usize) -> usize) -> TaggedPairing {
        let mut cur = self.clone();
        loop {
            let c = cur.collapsible();
            if c.is_empty() {
                return cur;
            }
            let (_, removed) = c[pick(c.len()) % c.len()];
            cur = cur.collapse(removed);
        }
    }
}

/// `S(Π, ϑ)` for the canonical collapse order.
pub fn skeleton(tagged: &TaggedPairing) -> TaggedPairing {
    tagged.skeleton()
}

/// Bridge count of the smallest skeleton over all collapse orders, by
/// exhaustive search.
pub fn min_skeleton_over_orders(tagged: &TaggedPairing) -> usize {
    let c = tagged.collapsible();
    if c.is_empty() {
        return tagged.size();
    }
    c.iter()
        .map(|&(_, removed)| min_skeleton_over_orders(&tagged.collapse(removed)))
        .min()
        .unwrap()
}

pub const MAX_SKELETON_EDGES: usize = 16;

/// `m(Π)`: the minimum skeleton size over all `2^|Π|` taggings.
pub fn min_skeleton_size(stems: &Stems, pairing: &[Bridge]) -> Result<usize> {
    if stems.len > MAX_SKELETON_EDGES {
        return Err(Error::SizeCap(format!(
            "m(Π) enumerates taggings only up to {MAX_SKELETON_EDGES} edges, got {}",
            stems.len
        )));
    }
    validate_pairing(stems, pairing)?;
    let k = pairing.len();
    let mut best = usize::MAX;
    for mask in 0u32..(1 << k) {
        let bridges = pairing
            .iter()
            .enumerate()
            .map(|(i, &b)| (b, if mask >> i & 1 == 1 { Tag::Twisted } else { Tag::Straight }))
            .collect();
        let t = TaggedPairing::new(*stems, bridges)?;
        best = best.min(t.skeleton().size());
        if best == 1 {
            break;
        }
    }
    Ok(best)
}

/// Ladder `L_n`: edge `k` bridged with edge `2n - 1 - k`.
pub fn ladder(n: usize) -> (Stems, Vec<Bridge>) {
    let stems = Stems { n, len: 2 * n };
    let bridges = (0..n).map(|k| bridge(k, 2 * n - 1 - k)).collect();
    (stems, bridges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_cycle_patterns() {
        let s = Stems::new(2, 2).unwrap();
        // rungs of the ladder L_2: parallel with i = 1, j = 3
        assert_eq!(detect_parallel(&s, (0, 3), (1, 2)).unwrap(), Relation::Parallel);
        // edges (0,1),(2,3) against (1,2),(3,0): antiparallel with i = 1, j = 3
        assert_eq!(detect_parallel(&s, (0, 2), (1, 3)).unwrap(), Relation::Antiparallel);
        assert!(detect_parallel(&s, (0, 2), (0, 2)).is_err());
    }

    #[test]
    fn distant_bridges_are_neither() {
        let s = Stems::new(4, 4).unwrap();
        assert_eq!(detect_parallel(&s, (0, 4), (2, 6)).unwrap(), Relation::Neither);
    }

    #[test]
    fn special_vertices_block_patterns() {
        // with n = 1 the pattern would need vertex 1 as i
        let s = Stems::new(1, 3).unwrap();
        assert_eq!(detect_parallel(&s, (0, 3), (1, 2)).unwrap(), Relation::Neither);
    }

    #[test]
    fn straight_ladders_collapse_to_one_bridge() {
        for n in 1..=7 {
            let (s, b) = ladder(n);
            let t = TaggedPairing::uniform(s, &b, Tag::Straight).unwrap();
            let sk = t.skeleton();
            assert_eq!(sk.size(), 1, "n = {n}");
            assert_eq!(sk.stems.len(), 2);
        }
        let (s, b) = ladder(2);
        assert_eq!(min_skeleton_size(&s, &b).unwrap(), 1);
    }

    #[test]
    fn single_bridge_is_a_fixed_point() {
        let s = Stems::new(1, 1).unwrap();
        let t = TaggedPairing::uniform(s, &[(0, 1)], Tag::Twisted).unwrap();
        assert_eq!(t.skeleton(), t);
        assert_eq!(min_skeleton_size(&s, &[(0, 1)]).unwrap(), 1);
    }

    #[test]
    fn compatible_pair_keeps_two_bridges() {
        let s = Stems::new(1, 3).unwrap();
        assert_eq!(detect_parallel(&s, (0, 2), (1, 3)).unwrap(), Relation::Neither);
        assert_eq!(min_skeleton_size(&s, &[(0, 2), (1, 3)]).unwrap(), 2);
    }

    #[test]
    fn rejects_bad_pairings() {
        let s = Stems::new(2, 2).unwrap();
        assert!(validate_pairing(&s, &[(0, 1)]).is_err());
        assert!(validate_pairing(&s, &[(0, 1), (1, 2)]).is_err());
        assert!(min_skeleton_size(&Stems::new(9, 9).unwrap(), &[]).is_err());
    }
}

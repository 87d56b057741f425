use serde::{Deserialize, Serialize};

use super::pairing::{bridge, compatible, min_skeleton_size, validate_pairing, Bridge, Stems};
use crate::error::{Error, Result};

/// A partition of the edges `0..L` into lumps, kept in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lumping {
    lumps: Vec<Vec<usize>>,
}

impl Lumping {
    pub fn new(len: usize, lumps: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; len];
        for lump in &lumps {
            if lump.is_empty() {
                return Err(Error::invalid("lumping", "empty lump"));
            }
            for &e in lump {
                if e >= len || seen[e] {
                    return Err(Error::invalid("lumping", format!("edge {e} repeated or out of range")));
                }
                seen[e] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("lumping", "lumps do not cover every edge"));
        }
        Ok(Self::canonical(lumps))
    }

    fn canonical(mut lumps: Vec<Vec<usize>>) -> Self {
        for l in &mut lumps {
            l.sort_unstable();
        }
        lumps.sort();
        Lumping { lumps }
    }

    pub fn lumps(&self) -> &[Vec<usize>] {
        &self.lumps
    }

    pub fn num_edges(&self) -> usize {
        self.lumps.iter().map(Vec::len).sum()
    }

    pub fn is_even(&self) -> bool {
        self.lumps.iter().all(|l| l.len() % 2 == 0)
    }

    pub fn is_pairing(&self) -> bool {
        self.lumps.iter().all(|l| l.len() == 2)
    }

    /// `p(Γ) = Σ (|γ| - 2)`.
    pub fn excess(&self) -> usize {
        self.lumps.iter().map(|l| l.len().saturating_sub(2)).sum()
    }

    pub fn bridges(&self) -> Vec<Bridge> {
        self.lumps.iter().filter(|l| l.len() == 2).map(|l| (l[0], l[1])).collect()
    }

    /// Whether every bridge of `pairing` lies inside a single lump.
    pub fn is_refined_by(&self, pairing: &[Bridge]) -> bool {
        let owner = self.owner();
        pairing.iter().all(|&(a, b)| a < owner.len() && b < owner.len() && owner[a] == owner[b])
    }

    fn owner(&self) -> Vec<usize> {
        let mut owner = vec![0; self.num_edges()];
        for (k, l) in self.lumps.iter().enumerate() {
            for &e in l {
                owner[e] = k;
            }
        }
        owner
    }
}

/// Every partition of `0..len` into lumps of even size.
pub fn even_lumpings(len: usize) -> Vec<Lumping> {
    fn rec(rest: &[usize], cur: &mut Vec<Vec<usize>>, out: &mut Vec<Lumping>) {
        let Some((&first, others)) = rest.split_first() else {
            out.push(Lumping::canonical(cur.clone()));
            return;
        };
        let k = others.len();
        for mask in 0u32..(1u32 << k) {
            if mask.count_ones() % 2 == 0 {
                continue;
            }
            let mut lump = vec![first];
            let mut left = Vec::with_capacity(k);
            for (i, &e) in others.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    lump.push(e);
                } else {
                    left.push(e);
                }
            }
            cur.push(lump);
            rec(&left, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if len % 2 == 0 {
        let edges: Vec<usize> = (0..len).collect();
        rec(&edges, &mut Vec::new(), &mut out);
    }
    out.sort();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyCase {
    Split,
    AdjacentEdges,
    A,
    B,
    C1,
    C2Prime,
    C2DoublePrime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub case: GreedyCase,
    pub lump: Vec<usize>,
    pub new_bridges: Vec<Bridge>,
    pub marked: Option<Bridge>,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyBranch {
    Exhaustive,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyResult {
    pub stems: Stems,
    pub input: Lumping,
    pub branch: GreedyBranch,
    pub pairing: Vec<Bridge>,
    pub marked: Vec<Bridge>,
    /// Lumping after the splitting phase (all lumps of size 2 or 4).
    pub split: Lumping,
    pub p_input: usize,
    pub p_split: usize,
    pub m: Option<usize>,
    pub steps: Vec<GreedyStep>,
    pub violations: Vec<String>,
}

impl GreedyResult {
    pub fn marked_count(&self) -> usize {
        self.marked.len()
    }
}

struct Candidate {
    case: GreedyCase,
    new_bridges: [Bridge; 2],
    marked: Bridge,
    stated: bool,
}

struct State {
    stems: Stems,
    lumps: Vec<Vec<usize>>,
    marked: Vec<Bridge>,
}

impl State {
    fn bridges(&self) -> Vec<Bridge> {
        self.lumps.iter().filter(|l| l.len() == 2).map(|l| bridge(l[0], l[1])).collect()
    }

    fn is_bridged(&self, a: usize, b: usize) -> bool {
        let b0 = bridge(a, b);
        a != b && self.lumps.iter().any(|l| l.len() == 2 && bridge(l[0], l[1]) == b0)
    }

    fn lump_of(&self, e: usize) -> usize {
        self.lumps.iter().position(|l| l.contains(&e)).unwrap()
    }

    fn incompatible_count(&self, b: Bridge, others: &[Bridge]) -> usize {
        others.iter().filter(|&&o| o != b && !compatible(&self.stems, b, o)).count()
    }

    /// (i) marked bridge compatible with every other bridge after the
    /// step, (ii) each new bridge incompatible with at most one other.
    fn properties(&self, c: &Candidate) -> (bool, bool) {
        let mut after = self.bridges();
        after.extend(c.new_bridges);
        let i = self.incompatible_count(c.marked, &after) == 0;
        let ii = c.new_bridges.iter().all(|&b| self.incompatible_count(b, &after) <= 1);
        (i, ii)
    }

    /// Incompatible pairs touching the marked or the new bridges.
    fn conflicts(&self, c: &Candidate) -> usize {
        let mut after = self.bridges();
        after.extend(c.new_bridges);
        let mut touched = c.new_bridges.to_vec();
        if !touched.contains(&c.marked) {
            touched.push(c.marked);
        }
        touched.iter().map(|&b| self.incompatible_count(b, &after)).sum()
    }

    fn rank(&self, c: &Candidate) -> (usize, bool, bool) {
        let (i, ii) = self.properties(c);
        let no_adj = c.new_bridges.iter().all(|&(a, b)| !self.stems.adjacent(a, b));
        let r = if i && ii && no_adj {
            0
        } else if i && ii {
            1
        } else if c.stated {
            2
        } else {
            3
        };
        (r, i, ii)
    }
}

fn split_pairs(g: &[usize], a: usize, b: usize) -> [Bridge; 2] {
    let rest: Vec<usize> = g.iter().copied().filter(|&e| e != a && e != b).collect();
    [bridge(a, b), bridge(rest[0], rest[1])]
}

fn adjacent_candidates(st: &State, g: &[usize]) -> Vec<Candidate> {
    let bridges = st.bridges();
    let mut out = Vec::new();
    for x in 0..4 {
        for y in x + 1..4 {
            let (e1, e2) = (g[x], g[y]);
            if !st.stems.adjacent(e1, e2) {
                continue;
            }
            let others: Vec<usize> = g.iter().copied().filter(|&e| e != e1 && e != e2).collect();
            for &i in &[e1, e2] {
                for &j in &others {
                    let marked = bridge(i, j);
                    let stated = bridges.iter().all(|&b| compatible(&st.stems, marked, b));
                    out.push(Candidate {
                        case: GreedyCase::AdjacentEdges,
                        new_bridges: split_pairs(g, i, j),
                        marked,
                        stated,
                    });
                }
            }
        }
    }
    out
}

fn case_a(st: &State, gi: usize) -> (bool, Vec<Candidate>) {
    let g = &st.lumps[gi];
    let mut applies = false;
    let mut out = Vec::new();
    for x in 0..4 {
        for y in x + 1..4 {
            let (e, e2) = (g[x], g[y]);
            let nbs: Vec<usize> = st.stems.neighbours(e).into_iter().chain(st.stems.neighbours(e2)).collect();
            let host = st.lump_of(nbs[0]);
            if host == gi || st.lumps[host].len() != 4 || nbs.iter().any(|&v| st.lump_of(v) != host) {
                continue;
            }
            applies = true;
            for &first in &[e, e2] {
                for &third in g.iter().filter(|&&v| v != e && v != e2) {
                    let outside = st.stems.neighbours(third).iter().any(|&v| st.lump_of(v) != host);
                    if outside {
                        out.push(Candidate {
                            case: GreedyCase::A,
                            new_bridges: split_pairs(g, first, third),
                            marked: bridge(first, third),
                            stated: true,
                        });
                    }
                }
            }
        }
    }
    (applies, out)
}

fn case_b(st: &State, gi: usize) -> (bool, Vec<Candidate>) {
    let g = &st.lumps[gi];
    let mut out = Vec::new();
    for b in st.bridges() {
        let [a0, a1] = st.stems.neighbours(b.0);
        let [c0, c1] = st.stems.neighbours(b.1);
        let mut all = vec![a0, a1, c0, c1];
        all.sort_unstable();
        all.dedup();
        if all.len() != 4 || all != *g {
            continue;
        }
        out.push(Candidate {
            case: GreedyCase::B,
            new_bridges: [bridge(a0, a1), bridge(c0, c1)],
            marked: b,
            stated: true,
        });
    }
    (!out.is_empty(), out)
}

fn case_c(st: &State, gi: usize) -> (Vec<Candidate>, Vec<String>) {
    let g = st.lumps[gi].clone();
    let l = st.stems.len();
    let bridges = st.bridges();
    let mut out = Vec::new();
    let mut notes = Vec::new();
    for &e0 in &g {
        let two_away = [(e0 + l - 2) % l, (e0 + 2) % l];
        if two_away.iter().filter(|v| g.contains(v)).count() > 1 {
            continue;
        }
        let nb0 = st.stems.neighbours(e0);
        let zeta: Vec<usize> = g
            .iter()
            .copied()
            .filter(|&e1| e1 != e0)
            .filter(|&e1| {
                let nb1 = st.stems.neighbours(e1);
                !nb1.iter().any(|&u| nb0.iter().any(|&v| st.is_bridged(u, v)))
            })
            .collect();
        if !zeta.is_empty() {
            for &e1 in &zeta {
                let pair = split_pairs(&g, e0, e1);
                let stated = st.incompatible_count(pair[1], &bridges) <= 1;
                out.push(Candidate {
                    case: GreedyCase::C1,
                    new_bridges: pair,
                    marked: pair[0],
                    stated,
                });
            }
            continue;
        }
        let pos0 = g.iter().position(|&v| v == e0).unwrap();
        let antipode = g[(pos0 + 2) % 4];
        let mut found = false;
        for &f0 in &nb0 {
            for &(u, v) in &bridges {
                let f1 = if u == f0 {
                    v
                } else if v == f0 {
                    u
                } else {
                    continue;
                };
                let nf = st.stems.neighbours(f1);
                if nf[0] == nf[1] || !nf.iter().all(|v| *v != e0 && g.contains(v)) || !nf.contains(&antipode) {
                    continue;
                }
                let e2 = antipode;
                let e1 = if nf[0] == e2 { nf[1] } else { nf[0] };
                let e3 = *g.iter().find(|&&v| v != e0 && v != e1 && v != e2).unwrap();
                let other = |e: usize| st.stems.neighbours(e).into_iter().find(|&v| v != f1).unwrap();
                let (g1, g2) = (other(e1), other(e2));
                found = true;
                if st.is_bridged(g1, g2) {
                    out.push(Candidate {
                        case: GreedyCase::C2DoublePrime,
                        new_bridges: [bridge(e2, e3), bridge(e0, e1)],
                        marked: bridge(e2, e3),
                        stated: true,
                    });
                } else {
                    out.push(Candidate {
                        case: GreedyCase::C2Prime,
                        new_bridges: [bridge(e1, e2), bridge(e0, e3)],
                        marked: bridge(e1, e2),
                        stated: true,
                    });
                }
            }
        }
        if !found {
            notes.push(format!("case (c2) found no bridge next to e0 = {e0}"));
        }
    }
    (out, notes)
}

fn exhaustive(stems: &Stems, lumping: &Lumping) -> Result<Option<(Vec<Bridge>, usize)>> {
    fn rec(lumps: &[Vec<usize>], acc: &mut Vec<Bridge>, out: &mut Vec<Vec<Bridge>>) {
        let Some((first, rest)) = lumps.split_first() else {
            out.push(acc.clone());
            return;
        };
        fn pairings(items: &[usize], acc: &mut Vec<Bridge>, out: &mut Vec<Vec<Bridge>>) {
            if items.is_empty() {
                out.push(acc.clone());
                return;
            }
            for k in 1..items.len() {
                let rest: Vec<usize> = items[1..].iter().copied().filter(|&e| e != items[k]).collect();
                acc.push(bridge(items[0], items[k]));
                pairings(&rest, acc, out);
                acc.pop();
            }
        }
        let mut local = Vec::new();
        pairings(first, &mut Vec::new(), &mut local);
        for p in local {
            let n = acc.len();
            acc.extend(p);
            rec(rest, acc, out);
            acc.truncate(n);
        }
    }
    let mut all = Vec::new();
    rec(lumping.lumps(), &mut Vec::new(), &mut all);
    let mut fallback = None;
    for mut p in all {
        p.sort_unstable();
        let m = min_skeleton_size(stems, &p)?;
        if m < 2 {
            continue;
        }
        if p.iter().all(|&(a, b)| !stems.adjacent(a, b)) {
            return Ok(Some((p, m)));
        }
        fallback.get_or_insert((p, m));
    }
    Ok(fallback)
}

/// Refine an even non-pairing lumping into a pairing whose skeletons keep
/// at least `max(p(Γ)/4, 2)` bridges.
pub fn greedy_refining_pairing(stems: &Stems, lumping: &Lumping) -> Result<GreedyResult> {
    let len = stems.len();
    if lumping.num_edges() != len {
        return Err(Error::invalid("lumping", format!("expected {len} edges, got {}", lumping.num_edges())));
    }
    if !lumping.is_even() {
        return Err(Error::invalid("lumping", "every lump must have even size"));
    }
    if lumping.is_pairing() {
        return Err(Error::invalid("lumping", "already a pairing"));
    }
    let p_input = lumping.excess();

    if len <= 8 {
        let found = exhaustive(stems, lumping)?;
        let Some((pairing, m)) = found else {
            return Err(Error::Algorithm(format!("no refining pairing of {lumping:?} has m ≥ 2")));
        };
        return Ok(GreedyResult {
            stems: *stems,
            input: lumping.clone(),
            branch: GreedyBranch::Exhaustive,
            pairing,
            marked: Vec::new(),
            split: lumping.clone(),
            p_input,
            p_split: p_input,
            m: Some(m),
            steps: Vec::new(),
            violations: Vec::new(),
        });
    }

    let mut st = State {
        stems: *stems,
        lumps: lumping.lumps().to_vec(),
        marked: Vec::new(),
    };
    let mut steps = Vec::new();
    let mut violations = Vec::new();

    while let Some(k) = st.lumps.iter().position(|l| l.len() >= 6) {
        let g = st.lumps.remove(k);
        let (head, tail) = g.split_at(4);
        steps.push(GreedyStep {
            case: GreedyCase::Split,
            lump: g.clone(),
            new_bridges: Vec::new(),
            marked: None,
            violations: Vec::new(),
        });
        st.lumps.insert(k, tail.to_vec());
        st.lumps.insert(k, head.to_vec());
    }
    let split = Lumping::canonical(st.lumps.clone());
    let p_split = split.excess();

    while let Some(gi) = st.lumps.iter().position(|l| l.len() == 4) {
        let g = st.lumps[gi].clone();
        let mut notes = Vec::new();
        let has_adjacent = (0..4).any(|x| (x + 1..4).any(|y| stems.adjacent(g[x], g[y])));
        let candidates = if has_adjacent {
            adjacent_candidates(&st, &g)
        } else {
            let (a_applies, a) = case_a(&st, gi);
            if a_applies && a.is_empty() {
                notes.push("case (a) holds but no edge has a neighbour outside the other lump".to_string());
            }
            if !a.is_empty() {
                a
            } else {
                let (b_applies, b) = case_b(&st, gi);
                if b_applies {
                    b
                } else {
                    let (c, n) = case_c(&st, gi);
                    if c.is_empty() {
                        notes.extend(n);
                    }
                    c
                }
            }
        };
        let best = candidates
            .into_iter()
            .map(|c| (st.rank(&c), st.conflicts(&c), c))
            .min_by_key(|(r, k, _)| (r.0, *k))
            .map(|(r, _, c)| (r, c));
        let Some(((rank, i, ii), c)) = best else {
            violations.extend(notes);
            return Err(Error::Algorithm(format!(
                "no greedy case applies to lump {g:?} of {:?} (stems n = {}, L = {len}); violations: {violations:?}",
                lumping.lumps(),
                stems.n()
            )));
        };
        if rank >= 2 {
            if !i {
                notes.push(format!("marked bridge {:?} is incompatible with another bridge", c.marked));
            }
            if !ii {
                notes.push(format!("a new bridge of {:?} is incompatible with two or more bridges", c.new_bridges));
            }
        }
        if rank == 3 {
            notes.push(format!("stated condition of case {:?} fails", c.case));
        }
        st.lumps.remove(gi);
        st.lumps.extend(c.new_bridges.iter().map(|&(a, b)| vec![a, b]));
        st.marked.push(c.marked);
        violations.extend(notes.iter().cloned());
        steps.push(GreedyStep {
            case: c.case,
            lump: g,
            new_bridges: c.new_bridges.to_vec(),
            marked: Some(c.marked),
            violations: notes,
        });
    }

    let mut pairing = st.bridges();
    pairing.sort_unstable();
    validate_pairing(stems, &pairing)?;
    let m = if len <= super::pairing::MAX_SKELETON_EDGES {
        Some(min_skeleton_size(stems, &pairing)?)
    } else {
        None
    };
    if let Some(m) = m {
        if (m as f64) < (p_input as f64 / 4.0).max(2.0) {
            violations.push(format!("m(Π) = {m} below max(p/4, 2) with p = {p_input}"));
        }
    }
    let mut marked = st.marked;
    marked.sort_unstable();
    Ok(GreedyResult {
        stems: *stems,
        input: lumping.clone(),
        branch: GreedyBranch::Greedy,
        pairing,
        marked,
        split,
        p_input,
        p_split,
        m,
        steps,
        violations,
    })
}

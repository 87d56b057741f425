//! Lumpings that admit a nonbacktracking vertex labelling. Only used to
//! select test instances; the algorithms never consult it.

use std::collections::BTreeSet;

use super::{Lumping, Stems};

fn nonbacktracking(stems: &Stems, x: &[usize]) -> bool {
    let (n, l) = (stems.n(), stems.len());
    let first = (0..n.saturating_sub(1)).all(|i| x[i] != x[(i + 2) % l]);
    let second = (n..l.saturating_sub(1)).all(|v| x[v] != x[(v + 2) % l]);
    first && second
}

fn induced(stems: &Stems, x: &[usize]) -> Lumping {
    let l = stems.len();
    let mut keys: Vec<((usize, usize), usize)> = (0..l)
        .map(|e| {
            let (a, b) = (x[e], x[(e + 1) % l]);
            ((a.min(b), a.max(b)), e)
        })
        .collect();
    keys.sort_unstable();
    let mut lumps: Vec<Vec<usize>> = Vec::new();
    let mut prev = None;
    for (k, e) in keys {
        if prev == Some(k) {
            lumps.last_mut().unwrap().push(e);
        } else {
            lumps.push(vec![e]);
            prev = Some(k);
        }
    }
    Lumping::new(l, lumps).unwrap()
}

/// Distinct even lumpings induced by nonbacktracking labellings of the
/// vertices, enumerated over all set partitions of the vertex set.
pub fn feasible_lumpings(stems: &Stems) -> Vec<Lumping> {
    fn rec(v: usize, blocks: usize, x: &mut Vec<usize>, stems: &Stems, out: &mut BTreeSet<Lumping>) {
        if v == stems.len() {
            if nonbacktracking(stems, x) {
                let g = induced(stems, x);
                if g.is_even() {
                    out.insert(g);
                }
            }
            return;
        }
        for b in 0..=blocks {
            x.push(b);
            rec(v + 1, blocks.max(b + 1), x, stems, out);
            x.pop();
        }
    }
    let mut out = BTreeSet::new();
    rec(0, 0, &mut Vec::new(), stems, &mut out);
    out.into_iter().collect()
}

/// Feasible lumpings that are not already pairings.
pub fn feasible_candidates(stems: &Stems) -> Vec<Lumping> {
    feasible_lumpings(stems).into_iter().filter(|g| !g.is_pairing()).collect()
}

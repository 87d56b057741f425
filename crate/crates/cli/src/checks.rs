//! Diagram checks shared by `diagrams` and `verify diagrams`.

use bandlab::diagrams::feasibility::feasible_candidates;
use bandlab::diagrams::*;
use bandlab::parallel::{map_indexed, Exec};
use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::DiagramCheck;

pub const SKELETON_INSTANCES: usize = 40;
pub const SKELETON_ORDERS: usize = 50;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagramSummary {
    pub check: DiagramCheck,
    pub max_edges: usize,
    pub rows: Vec<CheckRow>,
    #[serde(skip)]
    pub counterexamples: Vec<Value>,
}

impl DiagramSummary {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.failures == 0)
    }
}

fn skeleton_check(max_edges: usize, seed: u64) -> (Vec<CheckRow>, Vec<Value>) {
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for len in (2..=max_edges).step_by(2) {
        let results = map_indexed(Exec::Parallel, SKELETON_INSTANCES, |i| {
            let mut rng = bandlab::rng::stream(seed ^ len as u64, i as u64);
            let n = rng.random_range(0..=len);
            let stems = Stems::new(n, len - n).unwrap();
            let mut e: Vec<usize> = (0..len).collect();
            e.shuffle(&mut rng);
            let tagged = e
                .chunks(2)
                .map(|c| (bridge(c[0], c[1]), if rng.random_bool(0.5) { Tag::Twisted } else { Tag::Straight }))
                .collect();
            let t = TaggedPairing::new(stems, tagged).unwrap();
            let oracle = min_skeleton_over_orders(&t);
            let sizes: Vec<usize> = (0..SKELETON_ORDERS).map(|_| t.skeleton_by(|k| rng.random_range(0..k)).size()).collect();
            if sizes.iter().all(|&s| s == oracle) {
                None
            } else {
                Some(json!({ "check": "skeleton", "pairing": t, "oracle": oracle, "sizes": sizes }))
            }
        });
        let failures: Vec<Value> = results.into_iter().flatten().collect();
        rows.push(CheckRow { name: format!("skeleton L={len}"), instances: SKELETON_INSTANCES, failures: failures.len() });
        bad.extend(failures);
    }
    (rows, bad)
}

fn greedy_instance(stems: &Stems, g: &Lumping) -> Option<Value> {
    let fail = |why: String| Some(json!({ "check": "greedy", "stems": stems, "lumping": g, "reason": why }));
    let r = match greedy_refining_pairing(stems, g) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    if !g.is_refined_by(&r.pairing) {
        return fail(format!("{:?} does not refine", r.pairing));
    }
    let m = match min_skeleton_size(stems, &r.pairing) {
        Ok(m) => m,
        Err(e) => return fail(e.to_string()),
    };
    if (m as f64) < (g.excess() as f64 / 4.0).max(2.0) {
        return fail(format!("m = {m} for {:?}", r.pairing));
    }
    None
}

fn greedy_check(max_edges: usize) -> (Vec<CheckRow>, Vec<Value>) {
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for len in (6..=max_edges).step_by(2) {
        let all: Vec<Lumping> = even_lumpings(len).into_iter().filter(|g| !g.is_pairing()).collect();
        let mut feasible = Vec::new();
        for n in 0..=len {
            let stems = Stems::new(n, len - n).unwrap();
            feasible.extend(feasible_candidates(&stems).into_iter().map(|g| (stems, g)));
        }
        let jobs: Vec<(Stems, &Lumping)> = (0..=len)
            .flat_map(|n| all.iter().map(move |g| (Stems::new(n, len - n).unwrap(), g)))
            .collect();
        let every: Vec<Value> = map_indexed(Exec::Parallel, jobs.len(), |i| greedy_instance(&jobs[i].0, jobs[i].1))
            .into_iter()
            .flatten()
            .collect();
        let feas: Vec<Value> =
            map_indexed(Exec::Parallel, feasible.len(), |i| greedy_instance(&feasible[i].0, &feasible[i].1))
                .into_iter()
                .flatten()
                .collect();
        rows.push(CheckRow { name: format!("greedy L={len} every even lumping"), instances: jobs.len(), failures: every.len() });
        rows.push(CheckRow { name: format!("greedy L={len} feasible lumpings"), instances: feasible.len(), failures: feas.len() });
        bad.extend(every);
    }
    (rows, bad)
}

fn narayana_check(max_edges: usize) -> (Vec<CheckRow>, Vec<Value>) {
    let mut bad = Vec::new();
    let k_trees = max_edges.min(MAX_BOUGH_EDGES);
    let mut cells = 0;
    for k in 1..=k_trees {
        let h = leaf_histogram(k).expect("within cap");
        for (l, &count) in h.iter().enumerate().skip(1) {
            cells += 1;
            let formula = narayana(k as u64, l as u64).unwrap();
            if formula != BigUint::from(count) {
                bad.push(json!({ "check": "narayana", "k": k, "l": l, "enumerated": count, "formula": formula.to_string() }));
            }
        }
    }
    let tree_fail = bad.len();
    let mut catalan_fail = 0;
    for k in 1..=20u64 {
        let s: BigUint = (1..=k).map(|l| narayana(k, l).unwrap()).sum();
        if s != catalan(k) {
            catalan_fail += 1;
            bad.push(json!({ "check": "catalan", "k": k }));
        }
    }
    let mut bough_cells = 0;
    let mut bough_fail = 0;
    for k in 1..=k_trees {
        for c in bough_table(k).unwrap() {
            bough_cells += 1;
            if !c.bound_holds {
                bough_fail += 1;
                bad.push(json!({ "check": "bough", "cell": c }));
            }
        }
    }
    let rows = vec![
        CheckRow { name: format!("narayana vs plane trees k≤{k_trees}"), instances: cells, failures: tree_fail },
        CheckRow { name: "narayana sums = catalan k≤20".into(), instances: 20, failures: catalan_fail },
        CheckRow { name: format!("bough bound k≤{k_trees}"), instances: bough_cells, failures: bough_fail },
    ];
    (rows, bad)
}

pub fn run_diagram_check(check: DiagramCheck, max_edges: usize, seed: u64) -> DiagramSummary {
    let (rows, counterexamples) = match check {
        DiagramCheck::Skeleton => skeleton_check(max_edges, seed),
        DiagramCheck::Greedy => greedy_check(max_edges),
        DiagramCheck::Narayana => narayana_check(max_edges),
    };
    DiagramSummary { check, max_edges, rows, counterexamples }
}

use std::collections::BTreeSet;

use bandlab::diagrams::feasibility::{feasible_candidates, feasible_lumpings};
use bandlab::diagrams::*;
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pairing(rng: &mut ChaCha8Rng, len: usize) -> Vec<Bridge> {
    let mut e: Vec<usize> = (0..len).collect();
    e.shuffle(rng);
    e.chunks(2).map(|c| bridge(c[0], c[1])).collect()
}

fn random_tagged(rng: &mut ChaCha8Rng, len: usize) -> TaggedPairing {
    let n = rng.random_range(0..=len);
    let stems = Stems::new(n, len - n).unwrap();
    let b = random_pairing(rng, len);
    let tags = b
        .into_iter()
        .map(|b| (b, if rng.random_bool(0.5) { Tag::Twisted } else { Tag::Straight }))
        .collect();
    TaggedPairing::new(stems, tags).unwrap()
}

#[test]
fn skeleton_matches_order_oracle_and_is_confluent() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let len = 2 * rng.random_range(1..=5);
        let t = random_tagged(&mut rng, len);
        let base = t.skeleton().size();
        assert_eq!(base, min_skeleton_over_orders(&t), "{t:?}");
        for _ in 0..50 {
            let s = t.skeleton_by(|k| rng.random_range(0..k));
            assert_eq!(s.size(), base);
        }
    }
}

#[test]
fn ladder_taggings() {
    // all-straight collapses fully; all-twisted ladders have no antiparallel pair
    for n in 2..=6 {
        let (s, b) = ladder(n);
        let tw = TaggedPairing::uniform(s, &b, Tag::Twisted).unwrap();
        assert_eq!(tw.skeleton().size(), n);
        assert_eq!(min_skeleton_size(&s, &b).unwrap(), 1);
    }
}

#[test]
fn pattern_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let len = 2 * rng.random_range(2..=6);
        let n = rng.random_range(0..=len);
        let stems = Stems::new(n, len - n).unwrap();
        let p = random_pairing(&mut rng, len);
        assert_eq!(
            detect_parallel(&stems, p[0], p[1]).unwrap(),
            detect_parallel(&stems, p[1], p[0]).unwrap()
        );
    }
}

fn component_ids(stems: &Stems, pairing: &[Bridge], rel: Relation) -> Vec<usize> {
    let k = pairing.len();
    let mut id: Vec<usize> = (0..k).collect();
    fn find(id: &mut [usize], x: usize) -> usize {
        if id[x] != x {
            let r = find(id, id[x]);
            id[x] = r;
        }
        id[x]
    }
    for a in 0..k {
        for b in a + 1..k {
            if detect_parallel(stems, pairing[a], pairing[b]).unwrap() == rel {
                let (ra, rb) = (find(&mut id, a), find(&mut id, b));
                id[ra] = rb;
            }
        }
    }
    (0..k).map(|x| find(&mut id, x)).collect()
}

fn check_greedy(stems: &Stems, g: &Lumping, feasible: bool) {
    let r = greedy_refining_pairing(stems, g).unwrap_or_else(|e| panic!("{g:?}: {e}"));
    assert!(g.is_refined_by(&r.pairing));
    validate_pairing(stems, &r.pairing).unwrap();
    let m = min_skeleton_size(stems, &r.pairing).unwrap();
    assert_eq!(Some(m), r.m);
    assert!(m as f64 >= (g.excess() as f64 / 4.0).max(2.0), "{g:?} -> {:?}, m = {m}", r.pairing);
    assert!(2 * r.p_split >= r.p_input);
    if r.branch == GreedyBranch::Greedy {
        assert!(r.split.lumps().iter().all(|l| l.len() == 2 || l.len() == 4));
    }
    if feasible {
        for &(a, b) in &r.pairing {
            if stems.adjacent(a, b) {
                let shared = if (a + 1) % stems.len() == b { b } else { a };
                assert!(stems.is_special(shared), "{g:?} bridges ({a},{b})");
            }
        }
        assert!(r.violations.is_empty(), "{:?}", r.violations);
        for rel in [Relation::Parallel, Relation::Antiparallel] {
            let ids = component_ids(stems, &r.pairing, rel);
            let marked: BTreeSet<usize> = r
                .marked
                .iter()
                .map(|b| ids[r.pairing.iter().position(|p| p == b).unwrap()])
                .collect();
            assert_eq!(marked.len(), r.marked.len());
        }
        assert!(r.marked_count() <= m || r.branch == GreedyBranch::Exhaustive);
    }
}

#[test]
fn greedy_on_every_even_lumping() {
    for len in [6usize, 8, 10] {
        let all: Vec<Lumping> = even_lumpings(len).into_iter().filter(|g| !g.is_pairing()).collect();
        for n in 0..=len {
            let stems = Stems::new(n, len - n).unwrap();
            let feasible: BTreeSet<Lumping> = feasible_candidates(&stems).into_iter().collect();
            for g in &all {
                check_greedy(&stems, g, feasible.contains(g));
            }
        }
    }
}

#[test]
fn feasible_lumping_counts_are_frozen() {
    // brute force over every vertex partition
    let counts: Vec<usize> = (0..=8).map(|n| feasible_lumpings(&Stems::new(n, 8 - n).unwrap()).len()).collect();
    let candidates: usize = (0..=8).map(|n| feasible_candidates(&Stems::new(n, 8 - n).unwrap()).len()).sum();
    assert_eq!(candidates, 23);
    assert_eq!(counts.len(), 9);
    assert!(counts.iter().all(|&c| c > 0));
}

#[test]
fn union_of_four_lumps_twelve_edges() {
    let stems = Stems::new(6, 6).unwrap();
    let g = Lumping::new(12, vec![vec![0, 2, 7, 9], vec![1, 8], vec![3, 10], vec![4, 11], vec![5, 6]]).unwrap();
    let r = greedy_refining_pairing(&stems, &g).unwrap();
    assert_eq!(r.branch, GreedyBranch::Greedy);
    assert!(g.is_refined_by(&r.pairing));
    assert!(r.m.unwrap() >= 2);
    assert!(!r.steps.is_empty());
}

#[test]
fn narayana_matches_tree_enumeration() {
    for k in 1..=8usize {
        let h = leaf_histogram(k).unwrap();
        for l in 1..=k {
            assert_eq!(BigUint::from(h[l]), narayana(k as u64, l as u64).unwrap(), "k = {k}, l = {l}");
        }
        assert_eq!(h[0], 0);
    }
}

#[test]
fn narayana_sums_and_bound() {
    for k in 1..=20u64 {
        let s: BigUint = (1..=k).map(|l| narayana(k, l).unwrap()).sum();
        assert_eq!(s, catalan(k));
    }
    for k in 1..=12u64 {
        for l in 1..=k {
            assert!(narayana(k, l).unwrap() <= BigUint::from(k).pow(2 * l as u32 - 2));
        }
    }
    assert_eq!(catalan(10), BigUint::from(16796u32));
}

#[test]
fn bough_cells_satisfy_bound() {
    for k in 1..=8 {
        let cells = bough_table(k).unwrap();
        let total: u64 = cells.iter().map(|c| c.count).sum();
        // every tree except the star is nondegenerate
        assert_eq!(BigUint::from(total + 1), catalan(k as u64));
        for c in cells {
            assert!(c.bound_holds, "{c:?}");
            assert!(c.free >= 1);
            assert!(c.free + c.bound <= k);
        }
    }
    // k = 3: the path, plus three trees with one free and one bound leaf
    let k3: Vec<(usize, usize, u64)> = bough_table(3).unwrap().iter().map(|c| (c.free, c.bound, c.count)).collect();
    assert_eq!(k3, vec![(1, 0, 1), (1, 1, 3)]);
}

proptest! {
    #[test]
    fn every_refinement_keeps_lumps(seed in any::<u64>(), half in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = 2 * half;
        let p = random_pairing(&mut rng, len);
        let g = Lumping::new(len, p.iter().map(|&(a, b)| vec![a, b]).collect()).unwrap();
        prop_assert!(g.is_pairing());
        prop_assert_eq!(g.excess(), 0);
        prop_assert!(g.is_refined_by(&p));
        let n = rng.random_range(0..=len);
        let stems = Stems::new(n, len - n).unwrap();
        let m = min_skeleton_size(&stems, &p).unwrap();
        prop_assert!(m >= 1 && m <= half);
    }

    #[test]
    fn collapse_shrinks_by_one(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tagged(&mut rng, 10);
        for (_, removed) in t.collapsible() {
            let c = t.collapse(removed);
            prop_assert_eq!(c.size() + 1, t.size());
            prop_assert_eq!(c.stems.len() + 2, t.stems.len());
        }
    }
}

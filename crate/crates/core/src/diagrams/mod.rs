//! Pairings, lumpings and tree counts of the bare-stem expansion.

pub mod feasibility;
mod lumping;
mod pairing;
mod trees;

pub use lumping::{
    even_lumpings, greedy_refining_pairing, GreedyBranch, GreedyCase, GreedyResult, GreedyStep, Lumping,
};
pub use pairing::{
    bridge, detect_parallel, ladder, min_skeleton_over_orders, min_skeleton_size, skeleton, validate_pairing,
    Bridge, Relation, Stems, Tag, TaggedPairing, MAX_SKELETON_EDGES,
};
pub use trees::{
    bough_bound_holds, bough_table, catalan, count_constrained_boughs, dyck_words, leaf_histogram, narayana,
    narayana_u64, plane_trees, BoughCell, PlaneTree, MAX_BOUGH_EDGES,
};

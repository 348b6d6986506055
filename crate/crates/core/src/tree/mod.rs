//! Trees in `ℓ¹` for tree-like curves.
//!
//! A whisker word's matched pairs nest like parentheses. Each pair is a
//! semi-annulus over the parameter axis; the components of the complement
//! are vertex regions, dual to the vertices of a tree with one axis-aligned
//! edge per pair. The curve then factors as `γ = fold ∘ γ̃` through that tree.

mod export;
mod factor;
mod nesting;

pub use export::{edge_list, svg};
pub use factor::{
    build_tree, factorize, l1_distance, EdgeSpans, FactorReport, FactorTree, Factorization, RootPath, Sparse,
    TreeEdge, TreePoint, TreeVertex,
};
pub use nesting::{
    build_nesting, detect_spurious_corners, fuse_corners, gap_turn_angle, relabel_occurrences, FusedNesting,
    Nesting, RegionKind, Relabeled, SemiAnnulus, VertexRegion,
};

/// Default angle below which a corner counts as a smooth pass-through.
pub const DEFAULT_THETA_TOL: f64 = 1e-3;

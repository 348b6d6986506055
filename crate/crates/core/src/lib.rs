//! Thin homotopy and holonomic equivalence of piecewise-C¹ loops.
//!
//! The crate is organised around the pipeline that decides whether a loop is
//! tree-like:
//!
//! * [`curve`] samples, synthesises and decomposes curves into multiplicity
//!   strata and embedded arcs, producing a [`word::Word`].
//! * [`word`] reduces words in the free group and finds nesting pairings.
//! * [`tree`] turns a reducible word into a tree in ℓ¹ and factors the curve
//!   through it.
//! * [`reparam`] provides the C¹ monotone reparametrisations used everywhere
//!   a curve has to come to a halt.
//! * [`homotopy`] builds the explicit thin homotopies and checks them.
//! * [`holonomy`] is the numerical side: parallel transport in matrix Lie
//!   groups, word maps and path signatures.
//! * [`equivalence`] runs all four routes on a pair of curves.

pub mod curve;
pub mod equivalence;
pub mod error;
pub mod geom;
pub mod holonomy;
pub mod homotopy;
pub mod io;
pub mod reparam;
pub mod tree;
pub mod word;

pub use curve::{ArcDecomposition, CurveSpec, SampledCurve};
pub use error::{Error, Result};
pub use holonomy::{ConnectionField, GroupKind, HolonomyResult, SignatureTensor};
pub use homotopy::{HomotopyGrid, ThinnessReport};
pub use reparam::MonotoneC1Map;
pub use tree::{FactorTree, Factorization};
pub use word::{Letter, Pairing, Word};

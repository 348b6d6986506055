//! Holonomy oracles: parallel transport in matrix Lie groups, word maps,
//! connections built to separate loops, and path signatures.
//!
//! Transport solves `dU/dt = A(γ(t)) γ̇(t) U` with `U(0) = I`, so later
//! times multiply on the left and `U(γ₁·γ₂) = U(γ₂)·U(γ₁)`.

mod connection;
mod group;
mod signature;
mod transport;
mod tube;

pub use connection::{monomials, BasisFunction, ConnectionField, OneForm, Term, RANDOM_DEGREE};
pub use group::{distance_from_identity, inverse, word_map_eval, GroupKind, Mat};
pub use signature::{polyline_signature, signature, SignatureTensor, MAX_SIGNATURE_LEVEL};
pub use transport::{
    holonomy, holonomy_trivial, iterated_integrals, richardson_order, transport, HolonomyResult, TrivialityReport,
    MIN_STEPS,
};
pub use tube::{distinguishing_connection, TUBE_END_MARGIN, TUBE_RADIUS_FRACTION};

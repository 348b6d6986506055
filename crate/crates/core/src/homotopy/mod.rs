//! Explicit thin homotopies on `t × r` grids.
//!
//! A homotopy here never leaves the image of its source curve: every grid
//! point is the curve evaluated somewhere, so its Jacobian has rank at most
//! one up to discretisation. [`check_thin`] measures how close a grid comes
//! to that, and to halting on its boundary.

mod contract;
mod grid;
mod step2;
mod whiskers;

pub use contract::{contract_tree, default_padding, schedule_axis, default_r_step, Contraction, R_STEP_SAMPLES};
pub use grid::{
    check_thin, glue_and_halt, halt, image_containment, unhalt, HomotopyGrid, ImageReport, ThinnessReport, C1_RATIO_TOL,
};
pub use step2::{vanish_at_gaps, vanish_at_vertices};
pub use whiskers::{remove_whiskers, sub_decomposition};

//! Sampled curves, their synthesis from arcs, and their decomposition back
//! into multiplicity strata and embedded arcs.

pub mod corpus;
mod decompose;
mod overlap;
mod sampled;
mod synth;

pub use decompose::{decompose, decompose_with_index, word_of, ArcDecomposition, DecomposeOptions, LetterInterval};
pub use overlap::{critical_samples, self_overlap_index, self_overlap_index_brute, OverlapIndex, SampleClusters, SegmentRun};
pub use sampled::{uniform_grid, ArclengthTable, FnPath, Path, SampledCurve};
pub use synth::{synth_curve, Arc, ArcSpline, CurveSpec, Step, SynthOptions, Synthesized};

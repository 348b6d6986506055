use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("curve spec references missing arc `{0}`")]
    MissingArc(String),

    #[error("junction mismatch between traversal entries {index} and {next}: gap {gap:.3e}")]
    JunctionMismatch { index: usize, next: usize, gap: f64 },

    #[error("endpoint mismatch: {0:.3e}")]
    EndpointMismatch(f64),

    /// The curve cannot be decomposed at the configured geometric tolerance.
    #[error("resolution failure near t = {t:.6}: {reason}")]
    Resolution { t: f64, reason: String },

    #[error("word is not a whisker: reduces to `{0}`")]
    NotWhisker(String),

    #[error("word and tree do not match: {0}")]
    TreeMismatch(String),

    #[error("value {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("curve is not a loop")]
    NotALoop,

    #[error("letter `{0}` has no assigned group element")]
    Unassigned(String),

    #[error("arcs too close for disjoint tubes (separation {0:.3e})")]
    ArcsTooClose(f64),

    #[error("non-finite value during integration at t = {0}")]
    NonFinite(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

/// Errors produced by the estimators, certifiers, and generators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("column {col} has squared norm {norm_sq} exceeding the row count {n}")]
    ColumnNorm { col: usize, norm_sq: f64, n: usize },

    #[error("non-finite entry encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("support set contains duplicate index {index}")]
    DuplicateIndex { index: usize },

    #[error("support index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("operation requires a nonempty support set")]
    EmptySupport,

    #[error("support size {size} exceeds the orthant enumeration cap {cap}")]
    OrthantCapExceeded { size: usize, cap: usize },

    #[error("regression instance carries no ground truth")]
    MissingTruth,

    #[error(
        "coordinate descent did not converge after {sweeps} sweeps \
         (kkt residual {kkt_residual:.3e}); best iterate attached"
    )]
    NonConvergence {
        sweeps: usize,
        kkt_residual: f64,
        best: Vec<f64>,
    },

    #[error("inner solver did not certify the orthant subproblem (gap {gap:.3e}); best iterate attached")]
    InnerNonConvergence { gap: f64, best: Vec<f64> },

    #[error("bisection exceeded {rounds} rounds with interval [{lower}, {upper}]")]
    IterationLimit {
        rounds: usize,
        lower: f64,
        upper: f64,
    },

    #[error("brute-force oracle limited to p <= {max_p}, |T| <= {max_t} (got p = {p}, |T| = {t})")]
    SizeLimit {
        max_p: usize,
        max_t: usize,
        p: usize,
        t: usize,
    },

    #[error("design matrix is not the lower-triangular all-ones TV design")]
    NotTvDesign,

    #[error("direction violates the cone constraint: {detail}")]
    NotInCone { detail: String },

    #[error("invalid parameter {name}: {detail}")]
    Domain { name: &'static str, detail: String },

    #[error("missing input `{name}` for bound {bound}")]
    MissingInput { name: String, bound: &'static str },

    #[error("partition is not a disjoint cover of the column indices: {detail}")]
    InvalidPartition { detail: String },

    #[error("report schema mismatch: found `{found}`, expected `{expected}`")]
    SchemaVersion { found: String, expected: String },

    #[error("malformed CSV at line {line}: {detail}")]
    Csv { line: usize, detail: String },

    #[error("scenario aborted: {failed} of {trials} trials failed (first: {first})")]
    ScenarioFailures {
        failed: usize,
        trials: usize,
        first: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(name: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            name,
            detail: detail.into(),
        }
    }
}

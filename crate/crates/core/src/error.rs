use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be odd (got {0})")]
    EvenDimension(i64),

    #[error("dimension {0} is outside the supported range 1..=7")]
    DimensionOutOfRange(usize),

    #[error("invalid multi-index {index:?} for dimension {n}: {reason}")]
    InvalidMultiIndex { index: Vec<usize>, n: usize, reason: &'static str },

    #[error("gauge field violates the reality condition a_(j,-m) = -a_(j,m)^† (residual {residual:e} at direction {direction}, mode {mode:?})")]
    RealityViolation { direction: usize, mode: Vec<i32>, residual: f64 },

    #[error("invalid gauge field: {0}")]
    InvalidGauge(String),

    #[error("truncation below Nyquist margin: cutoff {cutoff} < mode radius {radius} + 1")]
    TruncationBelowNyquist { cutoff: usize, radius: usize },

    #[error("bundle rank mismatch: expected {expected}, gauge field has {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("eigensolver did not converge after {iterations} sweeps (matrix dimension {dim})")]
    NoConvergence { dim: usize, iterations: usize },

    #[error("unresolved crossing cluster at s={s:.9} in sector {sector}: eigenvalues {cluster:?}")]
    UnresolvedCrossing { s: f64, sector: String, cluster: Vec<f64> },

    #[error("grid must start at {lo} and end at {hi} with at least two increasing points")]
    BadGrid { lo: f64, hi: f64 },

    #[error("path {path} leaves the tracking window near zero (eigenvalue {value} at s={s}); enlarge the window")]
    WindowExit { path: usize, s: f64, value: f64 },

    #[error("tangential crossing unresolved on path {path} at s={s}")]
    TangentialUnresolved { path: usize, s: f64 },

    #[error("window too small: tail estimate {estimate:e} exceeds tolerance {tolerance:e}; try a window of at least {suggested}")]
    WindowTooSmall { estimate: f64, tolerance: f64, suggested: f64 },

    #[error("odd-degree input to a characteristic-form series (degree {0})")]
    OddDegree(usize),

    #[error("incompatible forms: {0}")]
    IncompatibleForms(String),

    #[error("normalization inconsistency: imaginary residue {residue:e} in a quantity that must be real")]
    NormalizationInconsistency { residue: f64 },

    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("time parameter must be positive (got {0})")]
    NonPositiveTime(f64),

    #[error("matrix is not antisymmetric (residual {0:e})")]
    NotAntisymmetric(f64),

    #[error("oracle grid too coarse: Richardson estimate {estimate:e} above tolerance {tolerance:e}; suggested refinement: {suggestion}")]
    OracleTooCoarse { estimate: f64, tolerance: f64, suggestion: String },

    #[error("identity violated beyond tolerance: {0}")]
    IdentityViolated(String),

    #[error("fit refused: only {0} valid rows (need at least 4)")]
    FitRefused(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

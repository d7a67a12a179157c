use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M^dag| = {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("trace is not one (|Tr - 1| = {residual:.3e})")]
    TraceNotOne { residual: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("Jacobi eigensolver did not converge in {sweeps} sweeps (off-diagonal norm {off_norm:.3e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix must be square and non-empty ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("Bloch vector norm {norm} exceeds 1")]
    BlochNormExceeded { norm: f64 },
    #[error("state vector norm {norm} is not 1")]
    NotNormalized { norm: f64 },
    #[error("metric parameter p = {p} must lie strictly between 0 and 1")]
    BadMetricParam { p: f64 },
    #[error("matrix power exponent {p} must lie in (0, 1]")]
    BadExponent { p: f64 },
    #[error("Gamma constructions disagree by {residual:.3e}")]
    CrossCheckFailed { residual: f64 },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("bad k = {k} for n = {n}")]
    BadK { k: usize, n: usize },
    #[error("not a permutation of 0..{n}")]
    BadPermutation { n: usize },
    #[error("bad pair index ({p}, {q}) for n = {n}")]
    BadPairIndex { p: usize, q: usize, n: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("weights are not on the probability simplex ({reason})")]
    NotSimplex { reason: String },
    #[error("negative or non-finite sampled coordinate {value} at {index}")]
    BadCoordinate { index: usize, value: f64 },
    #[error("chain violation: {upper} = {upper_value} < {lower} = {lower_value}")]
    ChainViolation {
        upper: String,
        upper_value: f64,
        lower: String,
        lower_value: f64,
    },
    #[error("cell ({row}, {col}) out of range for a {rows}x{cols} matrix")]
    CellOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("B2 needs two distinct cells")]
    IdenticalCells,
    #[error("B2 maximum needs at least two cells")]
    TooFewCells,
    #[error("q = {q} must lie in [0, 1]")]
    BadQ { q: f64 },
    #[error("need at least {needed} observables, got {got}")]
    TooFewObservables { needed: usize, got: usize },
    #[error("search space of {size} candidates exceeds the exhaustive limit {limit}")]
    SpaceTooLarge { size: u128, limit: u128 },
    #[error("unknown example {0} (expected 1..=4)")]
    UnknownExample(usize),
    #[error("unknown bound name '{0}'")]
    UnknownBoundName(String),
    #[error("bad sweep: {0}")]
    BadSweep(String),
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Validation(String),
    #[error("assertion failed: {0}")]
    AssertionFailure(String),
    #[error("at theta = {theta}: {source}")]
    AtTheta {
        theta: f64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_theta(self, theta: f64) -> Self {
        Error::AtTheta {
            theta,
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping theta annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTheta { source, .. } => source.root(),
            other => other,
        }
    }
}

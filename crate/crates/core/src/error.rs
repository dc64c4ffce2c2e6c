use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |A - A^dagger| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not a density matrix: {reason}")]
    NotDensity { reason: String },

    #[error("iterative decomposition did not converge: {0}")]
    NoConvergence(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid Schatten exponent p = {0} (need p >= 1 or p = inf)")]
    InvalidP(f64),

    #[error("circuit too wide: {qubits} qubits exceeds the limit of {limit}")]
    TooWide { qubits: usize, limit: usize },

    #[error("invalid circuit shape: {0}")]
    InvalidShape(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("no odd degree <= {cap} meets the sign-approximation bounds for delta = {delta:e}, eps = {eps:e}")]
    DegreeCapExceeded { cap: usize, delta: f64, eps: f64 },

    #[error("invalid sign-polynomial request: {0}")]
    InvalidRequest(String),

    #[error("x = {0} lies outside [-1, 1]")]
    OutOfDomain(f64),

    #[error("block-encodings cannot be combined: {0}")]
    ShapeMismatch(String),

    #[error("operator norm {norm:.12} exceeds 1")]
    NormTooLarge { norm: f64 },

    #[error("input block-encoding is not exact (alpha = {alpha}, eps = {eps})")]
    InexactInput { alpha: f64, eps: f64 },

    #[error("Chebyshev recurrence drifted: ||T_{k}(A)|| = {norm:.15} at step {k}")]
    RecurrenceUnstable { k: usize, norm: f64 },

    #[error("invalid target error eps = {0}")]
    InvalidEps(f64),

    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),

    #[error("gap alpha^2 - beta = {gap:e} is not positive")]
    GapNonpositive { gap: f64 },

    #[error("gap c - s = {gap:e} is below 1/q = {min:e}")]
    GapTooSmall { gap: f64, min: f64 },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),
}

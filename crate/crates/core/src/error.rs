use thiserror::Error;

/// Errors raised by the numerical oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma must lie in (0, 1), got {0}")]
    GammaOutOfRange(f64),
    #[error("dimension n must be at least 1")]
    ZeroDimension,
    #[error("n - 2 gamma must be positive (n = {n}, gamma = {gamma})")]
    DegenerateExponent { n: usize, gamma: f64 },
    #[error("operation `{0}` is undefined for gamma within 1e-3 of 1/2")]
    NearHalf(&'static str),
    #[error("integral over R^{n} requires decay exponent q > n, got q = {q}")]
    NonIntegrableDecay { n: usize, q: f64 },
    #[error("weighted boundary behaviour y^{s} is not integrable against y^(1-2gamma)")]
    NonIntegrableBoundary { s: f64 },
    #[error("full-space quadrature is limited to n <= 3 (got n = {0})")]
    DimensionTooLarge(usize),
    #[error("{what}: evaluation budget of {budget} exhausted (error estimate {err:e})")]
    BudgetExhausted { what: String, budget: usize, err: f64 },
    #[error("field must be C^2 near the evaluation point for the Taylor-subtracted integral")]
    InsufficientSmoothness,
    #[error("box too small: boundary values reach {ratio:.3e} of the peak (threshold {threshold:.1e})")]
    BoxTooSmall { ratio: f64, threshold: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("exponent constraint violated: {0}")]
    ExponentConstraint(String),
    #[error("linear solve failed: {0}")]
    SolveFailed(String),
    #[error("grid under-resolved: {0}")]
    UnderResolved(String),
    #[error("trace fit rejected: residual {residual:.3e} exceeds {limit:.3e}")]
    TraceFit { residual: f64, limit: f64 },
    #[error("differencing step failed Richardson gate: relative mismatch {mismatch:.3e}")]
    Richardson { mismatch: f64 },
    #[error("{0} produced a non-finite value")]
    NonFinite(String),
    #[error("recurrence degenerate: factor {0} vanishes")]
    DegenerateRecurrence(String),
    #[error("constant relation `{relation}` violated: relative residual {residual:.3e} > {tol:.1e}")]
    Inconsistent { relation: &'static str, residual: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

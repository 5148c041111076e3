use thiserror::Error;

pub type Result<T> = std::result::Result<T, EngineError>;

#[derive(Debug, Error)]
pub enum EngineError {
    /// Re-normalization or re-orthonormalization failed; usually `dt` is too large.
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("system size {0} must be even")]
    OddSize(usize),

    #[error("system size {size} exceeds the supported limit {limit}")]
    SizeLimit { size: usize, limit: usize },

    #[error("Krylov propagation did not converge: error estimate {estimate:e} > tol {tol:e} at m = {m}")]
    NoConvergence { estimate: f64, tol: f64, m: usize },

    #[error("time series do not share a common grid")]
    MismatchedGrids,

    #[error("averaging window [{t0}, {tf}] contains no samples")]
    EmptyWindow { t0: f64, tf: f64 },

    #[error("correlation eigenvalue {0} outside [0, 1] beyond tolerance")]
    SpectrumOutOfRange(f64),

    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),

    #[error("projection onto an outcome of vanishing probability ({0:e})")]
    DegenerateDenominator(f64),

    #[error("resolvent 1 + G+G- is numerically singular (rcond {0:e})")]
    SingularResolvent(f64),

    #[error("observable `{0}` is not supported by this engine")]
    UnsupportedObservable(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

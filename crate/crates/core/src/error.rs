use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point outside the phase domain: {0}")]
    Domain(String),
    #[error("phase singularity: {0}")]
    Singularity(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular Jacobian (|det| = {0:e})")]
    SingularJacobian(f64),
    #[error("tube family is empty: {0}")]
    EmptyFamily(String),
    #[error("lattice of {cells} cells exceeds the cell budget of {budget}")]
    Budget { cells: u128, budget: u64 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("y-grid spacing {spacing} too coarse for lambda = {lambda} (need <= {limit})")]
    Nyquist { spacing: f64, lambda: f64, limit: f64 },
    #[error("quadrature convergence gate failed: relative change {0:e}")]
    QuadratureGate(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

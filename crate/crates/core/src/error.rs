use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("principal-value quadrature at omega = {omega} did not converge (estimated error {estimate:e})")]
    QuadratureNotConverged { omega: f64, estimate: f64 },

    #[error("state norm drifted by {drift:e} over the run with dt = {dt}; reduce the step size")]
    NormDrift { drift: f64, dt: f64 },

    #[error("trace drifted to {trace} at t = {time} with dt = {dt}; reduce the step size")]
    TraceDrift { trace: f64, time: f64, dt: f64 },

    #[error("density matrix lost positivity (min eigenvalue {min_eigenvalue:e}) at t = {time} with dt = {dt}")]
    PositivityViolation { min_eigenvalue: f64, time: f64, dt: f64 },

    #[error("probability {value:e} at magnetization index {index} became negative at t = {time} with dt = {dt}")]
    NegativeProbability { value: f64, index: usize, time: f64, dt: f64 },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

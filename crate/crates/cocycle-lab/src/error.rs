use thiserror::Error;

/// Errors returned across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("determinant {0} is not 1 within 1e-12")]
    NotUnimodular(f64),
    #[error("matrix is a rotation, singular directions are undefined")]
    RotationMatrix,
    #[error("singular directions are not aligned (circle distance {0:e})")]
    DirectionMismatch(f64),
    #[error("potential distribution has a single support point")]
    DegenerateDistribution,
    #[error("family is not monotone in the parameter (delta_hat = {0:e})")]
    MonotonicityViolation(f64),
    #[error("no band violations observed; rate is at least {lower_bound:e}")]
    InsufficientEvents { lower_bound: f64 },
    #[error("singular directions do not cross inside the cell")]
    NoCrossing,
    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("fewer than 10 usable sites for the decay fit")]
    DegenerateSupport,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("family is not eligible: {0}")]
    IneligibleFamily(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("output error: {0}")]
    Output(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Output(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Output(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

/// Library error type.
///
/// `Parameter` maps to CLI exit code 1, `Numeric` and `Io` to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid input: bad physical parameters, malformed config, off-grid
    /// times, mismatched tables.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Numerical failure: solver instability, quadrature non-convergence,
    /// physicality violation beyond tolerance.
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

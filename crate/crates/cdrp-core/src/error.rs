use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Inputs outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to reach its accuracy target. Carries
    /// the partial estimate when one exists.
    #[error("numeric error: {message}")]
    Numeric {
        message: String,
        partial: Option<f64>,
    },

    /// A request that would exceed the configured memory budget.
    #[error("resource error: {0}")]
    Resource(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numeric(msg: impl Into<String>, partial: Option<f64>) -> Self {
        Error::Numeric {
            message: msg.into(),
            partial,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

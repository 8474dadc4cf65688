use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure classes shared by every module. Each maps onto a CLI exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid argument combination or shape.
    #[error("usage error: {0}")]
    Usage(String),
    /// A parameter lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative method failed to converge or a factorization broke down.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// A configured size bound was exceeded.
    #[error("resource error: {0}")]
    Resource(String),
    /// A lookup target is not covered by the achievable span.
    #[error("target {target} outside achievable range [{lo}, {hi}]")]
    Range { target: f64, lo: f64, hi: f64 },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Domain(_) | Error::Range { .. } => 2,
            Error::Numerical(_) => 3,
            Error::Resource(_) => 4,
            Error::Io(_) => 4,
        }
    }

    /// Prefixes the message with scenario context, keeping the error class.
    pub fn context(self, ctx: &str) -> Error {
        match self {
            Error::Usage(m) => Error::Usage(format!("{ctx}: {m}")),
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::Numerical(m) => Error::Numerical(format!("{ctx}: {m}")),
            Error::Resource(m) => Error::Resource(format!("{ctx}: {m}")),
            Error::Io(m) => Error::Io(format!("{ctx}: {m}")),
            r @ Error::Range { .. } => r,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

/// Failure modes shared by every module of the toolkit.
#[derive(Clone, Debug, Error)]
pub enum Error {
    /// An input violates a documented precondition.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The coupling triple lies outside `beta > max(mu1, mu2)`.
    #[error("domain error: {0}")]
    Domain(String),

    /// A power-law tail is too slow for the requested integral.
    #[error("divergent integral: tail exponent {exponent} must exceed {required}")]
    Divergent { exponent: f64, required: f64 },

    /// Kernel evaluated at a point where it is not finite.
    #[error("singular input: {0}")]
    Singular(String),

    /// A quantity needed a nonzero positive part and got none.
    #[error("undefined: {0}")]
    Undefined(String),

    /// An iterative construction or search did not reach its target.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Filesystem or CSV problem, carrying the offending path.
    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },

    /// Malformed configuration.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

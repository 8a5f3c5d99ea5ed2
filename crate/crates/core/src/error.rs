use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// An argument lies outside the domain of the formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A record violates one of its invariants.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The model has no solution for the given inputs.
    #[error("out of model: {0}")]
    OutOfModel(String),

    #[error("fit did not converge: {0}")]
    NonConvergence(String),

    /// Slope of the dephasing regression is statistically zero.
    #[error("extraction indeterminate: {0}")]
    Indeterminate(String),

    /// Malformed configuration; `path` is the JSON path of the offending value.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

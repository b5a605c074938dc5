use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("{name}: {message}")]
    Domain { name: &'static str, message: String },

    /// The multiple-impact map is 0/0 for the zero velocity.
    #[error("multiple-impact rule is undefined for the zero velocity")]
    DegenerateMultipleImpact,

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    /// A proven bound was not observed numerically.
    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("golden comparison: {0}")]
    Golden(String),

    #[error("grid case {index}: {source}")]
    Grid {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            name,
            message: message.into(),
        }
    }
}

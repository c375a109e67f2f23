use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Exhaustive routines refuse inputs whose subset space is too large.
    #[error("ground set of {n} elements exceeds the exhaustive limit of {limit} (2^{n} subsets)")]
    TooLarge { n: usize, limit: usize },

    #[error("set function is not normalized: f(∅) = {0}")]
    NotNormalized(String),

    #[error("set function is not monotone: f({smaller}) > f({larger})")]
    NotMonotone { smaller: String, larger: String },

    #[error("invalid rational {input:?}: {reason}")]
    ParseRational { input: String, reason: String },

    #[error("invalid instance field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("unknown example {0:?} (expected ex3_1, ex3_2 or ex4_1)")]
    UnknownExample(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidField {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

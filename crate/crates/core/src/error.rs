use thiserror::Error;

#[derive(Debug, Error)]
pub enum KepError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("parse error in field `{field}`: {msg}")]
    Parse { field: String, msg: String },
    #[error("unsupported parameter: {0}")]
    Unsupported(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("LP solver failure: {0}")]
    Solver(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, KepError>;

impl KepError {
    pub(crate) fn parse(field: impl Into<String>, msg: impl Into<String>) -> Self {
        KepError::Parse {
            field: field.into(),
            msg: msg.into(),
        }
    }
}

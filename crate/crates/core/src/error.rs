use thiserror::Error;

/// Errors raised by the dual algebra, norms, fitting and pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value ({0}) cannot enter the dual algebra")]
    NonFinite(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular standard part (condition estimate {cond:.3e})")]
    Singular { cond: f64 },

    #[error("{what} = {value} out of range {range}")]
    OutOfRange {
        what: &'static str,
        value: String,
        range: String,
    },

    #[error("invalid transition matrix: {0}")]
    InvalidTpm(String),

    #[error("clustering failed: {0}")]
    Clustering(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn out_of_range(
        what: &'static str,
        value: impl ToString,
        range: impl ToString,
    ) -> Self {
        Error::OutOfRange {
            what,
            value: value.to_string(),
            range: range.to_string(),
        }
    }

    /// Attaches the name of the pipeline stage that produced the error.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

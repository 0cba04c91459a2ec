use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: field `{field}`: {message}")]
    Parse {
        line: u64,
        field: &'static str,
        message: String,
    },
    #[error("line {line}: {field} {value} outside [{min}, {max}]")]
    Range {
        line: u64,
        field: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("line {line}: unparseable timestamp `{value}`")]
    Timestamp { line: u64, value: String },
    #[error("invalid header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("feature row has {found} columns, model expects {expected}")]
    Width { expected: usize, found: usize },
    #[error("{0}")]
    Metrics(String),
    #[error("{sigma}^{tau} overflows the supported integer range")]
    Overflow { sigma: u64, tau: u32 },
    #[error("unsupported model format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid array configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid codeword: {0}")]
    InvalidCodeword(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate channel{}: all coefficients are zero", fmt_theta(*theta_rad))]
    DegenerateChannel { theta_rad: Option<f64> },

    #[error("codebook has 2^{log2_cardinality} = {cardinality} entries, exceeding the enumeration budget of {budget}")]
    BudgetExceeded {
        log2_cardinality: u64,
        cardinality: String,
        budget: u128,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: schema error: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn fmt_theta(theta: Option<f64>) -> String {
    match theta {
        Some(t) => format!(" at theta = {t} rad"),
        None => String::new(),
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

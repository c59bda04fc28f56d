use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data: {usable} usable samples (need at least {required}), {censored} censored")]
    InsufficientData {
        usable: usize,
        required: usize,
        censored: usize,
    },

    #[error("invalid dyadic schedule k_min={k_min}, k_max={k_max}: {reason}")]
    InvalidSchedule {
        k_min: u32,
        k_max: u32,
        reason: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid interval exchange: {0}")]
    InvalidIet(String),

    #[error("point {0} is not representable in this system")]
    Unrepresentable(String),

    #[error("undefined bound: lower hitting indicator {0} is not positive")]
    UndefinedBound(f64),

    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("failed to parse config: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

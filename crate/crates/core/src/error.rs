use thiserror::Error;

use crate::estimation::TrialRecord;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("not an angular measure: atom ({x}, {y}) is off the unit circle")]
    NotAngular { x: f64, y: f64 },
    #[error("{0} is not a sum of two squares (empty eigenspace)")]
    EmptyEigenspace(u64),
    #[error("invalid resolution: {0}")]
    Resolution(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("counting error: {0}")]
    Counting(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("insufficient points for fit")]
    InsufficientPoints,
    #[error("run aborted at trial {trial} after {} completed trials: {source}", completed.len())]
    Aborted {
        trial: usize,
        completed: Vec<TrialRecord>,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error stems from user input rather than a failure during the run.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidMeasure(_)
            | Error::NotAngular { .. }
            | Error::EmptyEigenspace(_)
            | Error::Resolution(_)
            | Error::Config(_)
            | Error::Precondition(_)
            | Error::InsufficientPoints => true,
            Error::Aborted { source, .. } => source.is_config(),
            Error::Counting(_) | Error::Io(_) | Error::Json(_) => false,
        }
    }
}

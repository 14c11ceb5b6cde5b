use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid residue {ch:?} at position {pos}: sequences use only 'H' and 'P'")]
    InvalidResidue { ch: char, pos: usize },

    #[error("sequence length {0} is too short: at least 3 monomers are required")]
    SequenceTooShort(usize),

    #[error("invalid action character {0:?}: expected one of 'L', 'F', 'R'")]
    InvalidActionChar(char),

    #[error("action {action} is not valid at step {step_index}")]
    InvalidAction { action: char, step_index: usize },

    #[error("episode already finished at step {0}")]
    EpisodeFinished(usize),

    #[error("no valid actions to choose from")]
    EmptyActionMask,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("enumeration of N = {n} exceeds the feasibility bound {bound}; pass an explicit override")]
    EnumerationBound { n: usize, bound: usize },

    #[error("landscape export limited to N <= {bound}, got {n}")]
    LandscapeBound { n: usize, bound: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown benchmark id {0:?}")]
    UnknownBenchmark(String),

    #[error("conformation rejected: {0}")]
    Rejected(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Bad input (sequence, id, flag value) rather than a failure while running.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidResidue { .. }
                | Error::SequenceTooShort(_)
                | Error::InvalidActionChar(_)
                | Error::EnumerationBound { .. }
                | Error::LandscapeBound { .. }
                | Error::Config(_)
                | Error::UnknownBenchmark(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

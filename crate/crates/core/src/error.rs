use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("edge ({0}, {1}) has probability {2}, expected a value in (0, 1]")]
    Probability(u32, u32, f64),

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("edge probabilities have not been assigned")]
    Unweighted,

    #[error("invalid economics: {0}")]
    Economics(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("exact enumeration refused: {what} is {got}, cap is {cap}")]
    EnumerationCap {
        what: &'static str,
        got: usize,
        cap: usize,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

use std::path::PathBuf;

use thiserror::Error;

use crate::grid::GridPos;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cell {0} is already occupied")]
    OccupiedCell(GridPos),

    #[error("cell {to} is not Moore-adjacent to {from}")]
    NotAdjacent { from: GridPos, to: GridPos },

    #[error("unknown agent id {0}")]
    UnknownAgent(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("row {row} sums to {sum}, expected 1")]
    NotRowStochastic { row: usize, sum: f64 },

    #[error("negative entry {value} at row {row}, column {col}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("identity {identity} outside perception table of {len} identities")]
    UnknownIdentity { identity: usize, len: usize },

    #[error("cannot place {agents} agents on {cells} cells")]
    InfeasiblePlacement { agents: usize, cells: usize },

    #[error("unknown perceiver profile '{0}'")]
    UnknownProfile(String),

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error("population is empty")]
    EmptyPopulation,

    #[error("run length mismatch: expected {expected} records, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("unrecognised csv schema: {0}")]
    Schema(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

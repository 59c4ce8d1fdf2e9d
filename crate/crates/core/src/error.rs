use thiserror::Error;

use crate::domain::VarId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} is not in the domain of {var}")]
    ValueNotInDomain { var: VarId, value: i64 },
    #[error("cannot backtrack to level {target}: current level is {current}")]
    BadLevel { target: usize, current: usize },
    #[error("enumeration refused: {tuples} candidate tuples exceed the cap of {cap}")]
    CapExceeded { tuples: f64, cap: u64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown heuristic `{0}`; expected one of: {1}")]
    UnknownHeuristic(String, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

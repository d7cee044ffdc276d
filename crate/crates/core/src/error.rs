use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid graph: {0}")]
    Graph(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("malformed action at round {round} on node {node}: {msg}")]
    MalformedAction { round: usize, node: NodeId, msg: String },
    #[error("graph is disconnected; Token Computation unsolvable")]
    Disconnected,
    #[error("schedule violates rule {0}")]
    Invalid(crate::validate::Violation),
    #[error("no schedule within limit of {0} rounds")]
    NoScheduleWithinLimit(usize),
    #[error("instance refused: {0}")]
    TooLarge(String),
    #[error("linear program: {0}")]
    Lp(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Io(String),
    #[error("internal check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

use crate::encode::EncodeError;
use crate::eval::EvalError;
use crate::netlist::ParseError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("netlist: {0}")]
    Parse(#[from] ParseError),
    #[error("evaluation: {0}")]
    Eval(#[from] EvalError),
    #[error("encoding: {0}")]
    Encode(#[from] EncodeError),
    #[error("inconclusive: solver exhausted its budget of {0} conflicts")]
    Budget(u64),
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("invalid query: {0}")]
    Query(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("internal soundness violation: {0}")]
    Soundness(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("probability {0} outside the open interval (0, 1)")]
    InvalidProbability(f64),

    #[error("log-likelihood score {0} is positive")]
    PositiveScore(f64),

    #[error("flip rate undefined: original contains no {0} bits")]
    UndefinedRate(u8),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("candidate list {0} is empty")]
    EmptyList(usize),

    #[error("rank matrix needs {requested} counters, budget is {budget}")]
    MemoryBudget { requested: usize, budget: usize },

    #[error("candidate index must be at least 1")]
    ZeroIndex,

    #[error("no marked elements")]
    NoSolution,

    #[error("search space of {size} states exceeds simulator cap {cap}{}", interval_note(*.interval))]
    SpaceTooLarge {
        size: u128,
        cap: usize,
        interval: Option<u32>,
    },

    #[error("unknown identifier `{0}`")]
    Unknown(String),

    #[error("parse error: {0}")]
    Parse(String),
}

fn interval_note(interval: Option<u32>) -> String {
    match interval {
        Some(s) => format!(" (sub-interval s = {s})"),
        None => String::new(),
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },

    #[error("order mismatch: structure has order {expected}, got {found}")]
    OrderMismatch { expected: usize, found: usize },

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("cores inconsistent with structure: {0}")]
    Consistency(String),

    #[error("invalid permutation {0:?}")]
    InvalidPermutation(Vec<usize>),

    #[error("reference tensor has zero Frobenius norm")]
    ZeroNorm,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure while fitting structure {ranks:?}: {detail}")]
    NumericalFailure { ranks: Vec<usize>, detail: String },

    #[error("search space of {size} structures exceeds the limit of {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },

    #[error("template error: {0}")]
    Template(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Llm(#[from] LlmError),

    #[error("no valid initial structure after {turns} dialogue turn(s)")]
    NoInitialStructure { turns: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("bundle {path}: {detail}")]
    Bundle { path: PathBuf, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn bundle(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Bundle {
            path: path.into(),
            detail: detail.into(),
        }
    }
}

/// Failures to read a `RANKS: [...]` solution line out of a model reply.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no line of the form `RANKS: [k_1, ..., k_M]` found in reply")]
    NoSolutionLine,

    #[error("expected {expected} ranks, found {found}")]
    Arity { expected: usize, found: usize },

    #[error("`{0}` is not an integer rank")]
    NotInteger(String),

    #[error("rank {value} outside the allowed range [{min}, {max}]")]
    OutOfBounds { value: i64, min: usize, max: usize },
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("chat request rejected before sending: {0}")]
    Precondition(String),

    #[error("authentication failed (HTTP {status}); check the API key in ${env_var}")]
    Auth { status: u16, env_var: String },

    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },

    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },

    #[error("transport error after {attempts} attempt(s): {detail}")]
    Transport { attempts: u32, detail: String },

    #[error("malformed response body: {0}")]
    MalformedResponse(String),

    #[error("scripted replies exhausted after {consumed} response(s)")]
    ScriptExhausted { consumed: usize },
}

use thiserror::Error;

/// Errors produced by any part of the library.
#[derive(Debug, Error)]
pub enum EinError {
    /// Structural problem with a graph (bad endpoint, self loop, parallel edge, ...).
    #[error("invalid graph: {0}")]
    Graph(String),

    /// A DFS code sequence that does not describe a well-formed pattern.
    #[error("invalid DFS code: {0}")]
    Code(String),

    /// Text input that could not be parsed; carries file and line context.
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    /// Dataset-level problem (empty dataset, label mismatch, ...).
    #[error("dataset error: {0}")]
    Dataset(String),

    /// Train/valid/test splitting failed.
    #[error("split error: {0}")]
    Split(String),

    /// The miner hit the configured cap on materialized pattern nodes.
    #[error("pattern node cap of {cap} exceeded")]
    NodeCap { cap: usize },

    /// Non-finite loss or similar numeric failure.
    #[error("numeric failure: {0}")]
    NonFinite(String),

    /// Numeric failure during training, with the point it happened at.
    #[error("numeric error at lambda index {lambda_index}, outer iteration {outer_iter}: {msg}")]
    Numeric {
        lambda_index: usize,
        outer_iter: usize,
        msg: String,
    },

    /// Malformed or inconsistent model file.
    #[error("model file error: {0}")]
    ModelFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EinError>;

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the benchmark engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("{0} qubits exceeds the limit of {1} for this operation")]
    TooManyQubits(usize, usize),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("unsupported gate for this operation: {0}")]
    Unsupported(String),

    #[error("qasm parse error at line {line}, column {column}: {message}")]
    Qasm {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("scale factor {0} outside the supported range [1, 3]")]
    ScaleFactor(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("circuit {circuit_id}: {source}")]
    Circuit {
        circuit_id: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("counts validation failed: {0}")]
    Counts(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn in_circuit(self, circuit_id: usize) -> Self {
        Error::Circuit {
            circuit_id,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

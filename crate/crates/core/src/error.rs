use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} outside 1..={max}", max = crate::qsim::MAX_QUBITS)]
    QubitCount(usize),
    #[error("dense matrices are limited to {max} qubits, got {0}", max = crate::qsim::MAX_DENSE_QUBITS)]
    DenseTooLarge(usize),
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitIndex { index: usize, num_qubits: usize },
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("city count {k} outside {min}..={max}")]
    CityCount { k: usize, min: usize, max: usize },
    #[error("city {0} already visited")]
    AlreadyVisited(usize),
    #[error("city index {city} out of range for {k} cities")]
    CityIndex { city: usize, k: usize },
    #[error("episode already finished")]
    EpisodeDone,
    #[error("every action is masked")]
    AllMasked,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("missing prerequisite: {0}")]
    Missing(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

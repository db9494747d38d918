use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("requested {requested} distinct configurations but only {available} exist")]
    InfeasibleDataset { requested: usize, available: u128 },

    #[error("rank {k} out of range 1..={max}")]
    RankOutOfRange { k: usize, max: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("eigendecomposition did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("degenerate spectrum: largest and smallest eigenvalue coincide")]
    DegenerateSpectrum,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("seed collision at coordinates {0:?} and {1:?}")]
    SeedCollision(Vec<u64>, Vec<u64>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid walk model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("renewal representation needs a transient difference walk (d >= 3), got d = {0}")]
    Recurrent(usize),

    #[error("horizon {requested} exceeds the renewal table length {n_max}")]
    Horizon { requested: usize, n_max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is singular or not positive definite")]
    Singular,

    #[error("no r <= {0} with A(r) > 0")]
    NoPositiveCorrelation(usize),

    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("malformed records:\n  {}", .0.join("\n  "))]
    Records(Vec<String>),

    #[error("cache format: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

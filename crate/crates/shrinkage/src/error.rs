use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix not positive definite at pivot {pivot}")]
    NotPositiveDefinite { pivot: usize },
    #[error("inner system singular (n x n solve failed at pivot {pivot})")]
    InnerSystemSingular { pivot: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure in chain {chain} at iteration {iteration}: {detail}")]
    Numeric {
        chain: usize,
        iteration: usize,
        detail: String,
    },
    #[error("improper prior: {0}")]
    ImproperPrior(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Data(_) | Error::Csv(_) | Error::Json(_) => 2,
            Error::ImproperPrior(_) => 2,
            Error::Io(_) => 2,
            _ => 3,
        }
    }
}

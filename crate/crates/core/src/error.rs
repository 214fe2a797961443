use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("age {age} outside [{lo}, {hi}]")]
    AgeOutOfRange { age: u32, lo: u32, hi: u32 },

    #[error("zero survival mass at age {0}")]
    ZeroSurvival(u32),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("incompatible age grids: {0}")]
    IncompatibleGrids(String),

    #[error("missing curve for band {0}")]
    MissingBand(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("fit did not converge; best c={c} k={k} theta={theta} (residual {residual})")]
    FitNotConverged {
        c: f64,
        k: f64,
        theta: f64,
        residual: f64,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is outside its domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid distortion: {0}")]
    InvalidDistortion(String),

    /// g(1 - F(0)) = 0, so the dual distribution is undefined.
    #[error("degenerate distortion: g(1 - F(0)) = {0}")]
    DegenerateDistortion(f64),

    /// The standing market assumption `0 < E[Z] < pi < E_g[Z] < inf` fails.
    #[error("market assumption violated: {0}")]
    Assumption(String),

    /// An indemnity or retention function is not incentive compatible.
    #[error("inadmissible contract: {0}")]
    Inadmissible(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("solver failed: {0}")]
    Solver(String),

    /// The quantile-domain solvers need an absolutely continuous quantile
    /// function with positive density.
    #[error("quantile density unavailable: {0}")]
    NoQuantileDensity(String),

    #[error("distortion is not concave on [0, {0}]")]
    NotConcave(f64),

    /// Two independent evaluation routes of the same quantity disagree.
    #[error("cross-check failed: {0}")]
    CrossCheck(String),

    /// A reproduction run no longer matches its known closed form.
    #[error("regression: {0}")]
    Regression(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

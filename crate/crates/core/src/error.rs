use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("locations {first} and {second} coincide under the active metric")]
    DuplicateLocation { first: usize, second: usize },

    #[error("requested m = {m} exceeds the stored conditioning-set size m_max = {m_max}")]
    Truncation { m: usize, m_max: usize },

    #[error("at least two replicates are required, got {0}")]
    InsufficientReplicates(usize),

    #[error("covariance model produced a non-finite entry at ({row}, {col})")]
    ModelEvaluation { row: usize, col: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("geometry does not match data: {0}")]
    GeometryMismatch(String),

    #[error("posterior factorization failed in column {column}")]
    PosteriorFactorization { column: usize },

    #[error("invalid factor: {0}")]
    InvalidFactor(String),

    #[error("dense operation requested for n = {n}, above the limit {limit}")]
    DenseLimitExceeded { n: usize, limit: usize },

    #[error("estimate is singular or not positive definite")]
    SingularEstimate,

    #[error("objective is not finite at the initial hyperparameters")]
    Initialization,

    #[error("latent-field factorization failed in sweep {sweep}")]
    GibbsFactor { sweep: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ModelEvaluation { .. }
                | Error::NotPositiveDefinite
                | Error::PosteriorFactorization { .. }
                | Error::SingularEstimate
                | Error::Initialization
                | Error::GibbsFactor { .. }
        )
    }
}

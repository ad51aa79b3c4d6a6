use thiserror::Error;

/// Errors split into two families: bad input (validation) and computations
/// the library refuses to complete because the result would be
/// untrustworthy. The CLI maps the first family to exit code 1 and the
/// second to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),

    /// An inversion whose error amplification exceeds the configured bound.
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    /// Recovered statistics went negative beyond the clipping tolerance.
    #[error("negativity: {0}")]
    Negativity(String),

    /// A truncated computation whose declared tail bound is too large.
    #[error("truncation-insufficient: {0}")]
    TruncationInsufficient(String),

    /// A deconvolution matrix without enough numerical rank.
    #[error("rank-deficient: {0}")]
    RankDeficient(String),
}

impl Error {
    /// Process exit code for this error: 1 for validation, 2 for refusals.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("rank error: {0}")]
    Rank(String),

    #[error("degenerate basis: {0}")]
    Degenerate(String),

    #[error("range error: {0}")]
    Range(String),

    #[error(
        "rank deficiency: singular value #{index} ({value:.3e}) is below tolerance {tolerance:.3e}"
    )]
    RankDeficient {
        /// 1-based index of the first singular value that failed the test.
        index: usize,
        value: f64,
        tolerance: f64,
    },

    #[error("weighting error: {0}")]
    Weighting(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singularity(_)
                | Error::Degenerate(_)
                | Error::RankDeficient { .. }
                | Error::Weighting(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

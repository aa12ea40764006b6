use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Field evaluated too close to a point-mass centre.
    #[error("field singularity: evaluation point is {distance:e} m from the point-mass centre")]
    Singularity { distance: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("rank-deficient probe set: design matrix has rank {rank}, need 6")]
    RankDeficient { rank: usize },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

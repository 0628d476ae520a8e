use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("statistic requested on an empty sample")]
    EmptySample,

    /// Sample standard deviation is zero, so a ratio statistic is undefined.
    #[error("degenerate sample: standard deviation is zero")]
    DegenerateSample,

    #[error(
        "quadrature did not converge: estimate {estimate:e}, last relative change {change:e} \
         after {evaluations} evaluations"
    )]
    Quadrature {
        estimate: f64,
        change: f64,
        evaluations: usize,
    },

    /// The requested limit law collapses to a point mass.
    #[error("limit law is degenerate: point mass at {point_mass}")]
    DegenerateLimit { point_mass: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

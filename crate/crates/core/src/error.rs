use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which frequency-table invariant failed during certification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableInvariant {
    ZeroModes,
    Monotone,
    Convexity,
}

impl fmt::Display for TableInvariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableInvariant::ZeroModes => write!(f, "omega(0) = omega(1) = 0"),
            TableInvariant::Monotone => write!(f, "omega strictly increasing for j >= 2"),
            TableInvariant::Convexity => write!(f, "second difference positive"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("gamma pole at x = {0}")]
    Pole(f64),

    #[error("alpha = {0} outside (0, 2)")]
    InvalidAlpha(f64),

    #[error("alpha = {0} is too close to 1 for this formula")]
    AlphaIsOne(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("removable singularity: xi = {xi} is within 1e-9 of 1 - alpha/2")]
    RemovableSingularity { xi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("table invariant violated at j = {j}: {invariant}")]
    InvariantViolation { j: usize, invariant: TableInvariant },

    #[error("blow-up guard tripped at t = {t}: sup|f| = {sup} > 0.5")]
    BlowUp { t: f64, sup: f64 },

    #[error("step failed at t = {t}: {source}")]
    Step {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("lifespan fit needs at least 3 uncensored runs, got {0}")]
    TooFewUncensored(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A sampled object does not fit on the grid it was asked to live on.
    #[error("coverage error: {what} (lost fraction {lost:.3e})")]
    Coverage { what: String, lost: f64 },

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    /// Mode truncation discarded more weight than the caller allows.
    #[error("truncation error: discarded weight {discarded:.3e} exceeds {limit:.1e}")]
    Truncation { discarded: f64, limit: f64 },

    #[error("computation failed: {0}")]
    Computation(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn coverage(what: impl Into<String>, lost: f64) -> Self {
        Error::Coverage {
            what: what.into(),
            lost,
        }
    }
}

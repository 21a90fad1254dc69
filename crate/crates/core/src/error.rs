use thiserror::Error;

use crate::types::Solution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The QoS constraint cannot be met. Either the cheap multicast bound
    /// screened it out, or the cone solver returned an infeasibility
    /// certificate.
    #[error("scenario infeasible: {0}")]
    Infeasible(String),

    /// The interior-point solver gave up. `partial` carries the iterates
    /// accepted before the failure, when there were any.
    #[error("numerical failure: {reason}")]
    NumericalFailure {
        reason: String,
        partial: Option<Box<Solution>>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

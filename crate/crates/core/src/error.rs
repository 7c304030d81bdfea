use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::estimation::EstimationError;
use crate::firm_model::FirmError;
use crate::growth_analysis::GrowthError;
use crate::io::IngestError;
use crate::network::NetworkError;
use crate::scenario::ScenarioError;

/// Any error raised by the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Firm(#[from] FirmError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input, configuration or arguments.
    Validation,
    /// The numerics failed: no convergence, or a supercritical network.
    Numeric,
    /// Reading or writing a file failed.
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Estimation(EstimationError::NonConvergence { .. }) => ErrorKind::Numeric,
            Error::Network(NetworkError::Supercritical { .. }) => ErrorKind::Numeric,
            Error::Ingest(IngestError::Io { .. } | IngestError::Write(_)) => ErrorKind::Io,
            Error::Scenario(e) => e.kind(),
            _ => ErrorKind::Validation,
        }
    }
}

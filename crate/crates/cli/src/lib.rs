//! Manifest-driven driver for building, verifying, searching, decoding and exporting.

pub mod bundle;
pub mod commands;
pub mod manifest;
pub mod suites;

use hdx_core::builders::BuildError;
use hdx_core::geometry::GeometryError;
use hdx_core::local::LocalError;
use hdx_core::sheaf::SheafError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("construction: {0}")]
    Construction(String),
    #[error("verification failed: {0}")]
    Verification(String),
    /// Partial results were written before the budget ran out.
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("bundle: {0}")]
    Bundle(String),
    #[error("io: {0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Manifest(_) => 2,
            CliError::Construction(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Budget(_) => 5,
            CliError::Bundle(_) | CliError::Io(_) | CliError::Usage(_) => 1,
        }
    }
}

macro_rules! construction {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Construction(format!("{e:?}: {e}"))
            }
        }
    )*};
}

construction!(BuildError, GeometryError, SheafError, LocalError);

//! Error type carrying the process exit code.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error
//! (missing or malformed input files, failed artifact writes), 3 a `--check`
//! threshold was not met.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config values, or parameters rejected by the library.
    Usage(String),
    /// Missing or unreadable data files, or artifact I/O failures.
    Data(String),
    /// A `--check` assertion failed.
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Check(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Check(m) => f.write_str(m),
        }
    }
}

impl From<photonn::mesh::MeshError> for CliError {
    fn from(e: photonn::mesh::MeshError) -> Self {
        CliError::Usage(format!("mesh parameters: {e}"))
    }
}

impl From<photonn::activation::ActivationError> for CliError {
    fn from(e: photonn::activation::ActivationError) -> Self {
        CliError::Usage(format!("activation parameters: {e}"))
    }
}

impl From<photonn::network::NetworkError> for CliError {
    fn from(e: photonn::network::NetworkError) -> Self {
        CliError::Usage(format!("network: {e}"))
    }
}

impl From<photonn::training::TrainError> for CliError {
    fn from(e: photonn::training::TrainError) -> Self {
        CliError::Usage(format!("training: {e}"))
    }
}

impl From<photonn::data::DataError> for CliError {
    fn from(e: photonn::data::DataError) -> Self {
        CliError::Data(format!("data: {e}"))
    }
}

impl From<photonn::perf::PerfError> for CliError {
    fn from(e: photonn::perf::PerfError) -> Self {
        CliError::Usage(format!("hardware model: {e}"))
    }
}

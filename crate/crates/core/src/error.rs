use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("AR model fit failed: {0}")]
    ModelFit(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("insufficient history: need lag {needed}, have {available} samples")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("invalid grouping: {0}")]
    Grouping(String),
    #[error("invalid cluster size Q={q} for L={l} access points")]
    InvalidClusterSize { q: usize, l: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

impl SimError {
    /// True for errors caused by bad user input rather than numerical trouble.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            SimError::Config(_) | SimError::InvalidClusterSize { .. } | SimError::Io(_)
        )
    }
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

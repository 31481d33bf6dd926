//! Link-level Monte-Carlo simulator for mobile cell-free massive MIMO.
//!
//! The crate covers channel prediction under mobility (outdated CSI, Kalman
//! prediction on an autoregressive fading model, predictor antennas),
//! oscillator phase drift with scheduled and hierarchical reciprocity
//! calibration, rate-splitting downlink transmission, and user-centric AP
//! clustering through an evolutionary game. The [`harness`] module ties these
//! together into sweep runners that emit flat CSV records.

pub mod channel;
pub mod clustering;
pub mod error;
pub mod harness;
pub mod phase;
pub mod prediction;
pub mod rng;
pub mod scenario;
pub mod transmission;

pub use error::{Result, SimError};
pub use num_complex::Complex64;
pub use scenario::{Layout, ScenarioConfig};

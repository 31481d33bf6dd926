//! NMSE against UE speed for outdated CSI, Kalman prediction and the
//! predictor antenna.

use serde::{Deserialize, Serialize};

use super::{MetricName, MetricRecord, SimConfig};
use crate::error::{Result, SimError};
use crate::prediction::{nmse_sweep, Method, PredictionParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig3Config {
    pub speed_min_kmh: f64,
    pub speed_max_kmh: f64,
    /// Log-spaced grid points between the two limits.
    pub speed_points: usize,
    /// Explicit grid; overrides the log-spaced one when set.
    pub speeds_kmh: Option<Vec<f64>>,
    pub prediction: PredictionParams,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Self {
            speed_min_kmh: 10.0,
            speed_max_kmh: 400.0,
            speed_points: 14,
            speeds_kmh: None,
            prediction: PredictionParams::default(),
        }
    }
}

impl Fig3Config {
    pub fn speeds(&self) -> Vec<f64> {
        if let Some(v) = &self.speeds_kmh {
            return v.clone();
        }
        let n = self.speed_points;
        if n == 1 {
            return vec![self.speed_min_kmh];
        }
        let ratio = self.speed_max_kmh / self.speed_min_kmh;
        (0..n)
            .map(|i| self.speed_min_kmh * ratio.powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.prediction.validate()?;
        let speeds = self.speeds();
        if speeds.is_empty() || speeds.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SimError::Config(
                "speed grid must be non-empty and non-negative".into(),
            ));
        }
        if self.speeds_kmh.is_none()
            && !(self.speed_min_kmh > 0.0 && self.speed_max_kmh >= self.speed_min_kmh)
        {
            return Err(SimError::Config(
                "need 0 < speed_min_kmh <= speed_max_kmh".into(),
            ));
        }
        Ok(())
    }
}

/// One NMSE record per (speed, method).
pub fn run_fig3(cfg: &SimConfig, seed: u64) -> Result<Vec<MetricRecord>> {
    let speeds = cfg.fig3.speeds();
    let cells = nmse_sweep(
        &cfg.scenario,
        &cfg.fig3.prediction,
        &speeds,
        &Method::ALL,
        seed,
    )?;
    Ok(cells
        .into_iter()
        .map(|c| MetricRecord {
            experiment: "fig3".into(),
            sweep_name: "speed_kmh".into(),
            sweep_value: c.speed_kmh,
            scheme: c.method.name().into(),
            ue_index: None,
            metric: MetricName::Nmse,
            value: c.nmse,
            seed,
        })
        .collect())
}

//! Hierarchical calibration against network-wide TLS on synthetic networks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MetricName, MetricRecord, SimConfig};
use crate::channel::sample_large_scale;
use crate::error::{Result, SimError};
use crate::phase::{
    build_calibration_network, global_tls_calibrate, hierarchical_calibrate, CalibrationParams,
};
use crate::rng::substream;
use crate::scenario::{generate_layout, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibConfig {
    /// Network sizes (number of APs).
    pub sizes: Vec<usize>,
    /// Random networks averaged per size.
    pub trials: usize,
    pub calibration: CalibrationParams,
}

impl Default for CalibConfig {
    fn default() -> Self {
        Self {
            sizes: vec![8, 16, 40],
            trials: 20,
            calibration: CalibrationParams::default(),
        }
    }
}

impl CalibConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.iter().any(|&s| s < 2) || self.sizes.is_empty() || self.trials == 0 {
            return Err(SimError::Config(
                "calib sizes must be >= 2 and trials positive".into(),
            ));
        }
        Ok(())
    }
}

/// Mean residual error and pilot overhead of both schemes per network size.
pub fn run_calib_demo(cfg: &SimConfig, seed: u64) -> Result<Vec<MetricRecord>> {
    let c = &cfg.calib;
    let mut records = Vec::new();
    for (si, &size) in c.sizes.iter().enumerate() {
        let sc = ScenarioConfig {
            num_aps: size,
            ..cfg.scenario.clone()
        };
        let per_trial: Vec<[f64; 4]> = (0..c.trials)
            .into_par_iter()
            .map(|t| {
                let idx = (si as u64) << 32 | t as u64;
                let mut rng = substream(seed, "calib-net", idx);
                let layout = generate_layout(&sc, &mut rng);
                let ls = sample_large_scale(&layout, &cfg.pathloss, &mut rng);
                let net = build_calibration_network(
                    &layout,
                    &ls,
                    &c.calibration,
                    &cfg.pathloss,
                    &mut rng,
                )?;
                let h = hierarchical_calibrate(&net, &mut substream(seed, "calib-hier", idx))?;
                let g = global_tls_calibrate(&net, &mut substream(seed, "calib-global", idx))?;
                Ok([
                    h.residual_error,
                    h.pilot_overhead as f64,
                    g.residual_error,
                    g.pilot_overhead as f64,
                ])
            })
            .collect::<Result<_>>()?;
        let n = per_trial.len() as f64;
        let mut mean = [0.0; 4];
        for v in &per_trial {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let rows = [
            ("hierarchical", MetricName::ResidualError, mean[0]),
            ("hierarchical", MetricName::PilotOverhead, mean[1]),
            ("global_tls", MetricName::ResidualError, mean[2]),
            ("global_tls", MetricName::PilotOverhead, mean[3]),
        ];
        for (scheme, metric, value) in rows {
            records.push(MetricRecord {
                experiment: "calib".into(),
                sweep_name: "num_aps".into(),
                sweep_value: size as f64,
                scheme: scheme.into(),
                ue_index: None,
                metric,
                value,
                seed,
            });
        }
    }
    Ok(records)
}

//! Experiment orchestration: configuration, records, CSV/JSON output and
//! the sweep runners.

mod calib;
mod fig3;
mod fig4;
mod fig5;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use calib::{run_calib_demo, CalibConfig};
pub use fig3::{run_fig3, Fig3Config};
pub use fig4::{run_fig4, Fig4Config, Fig4Detail};
pub use fig5::{run_fig5, Fig5Config, UplinkEvaluator};

use crate::channel::PathLossParams;
use crate::error::{Result, SimError};
use crate::scenario::ScenarioConfig;

pub const CSV_HEADER: &str = "experiment,sweep_param,scheme,ue_index,metric_name,value,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Nmse,
    SumSe,
    PerUeSe,
    ResidualError,
    PilotOverhead,
}

impl MetricName {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::Nmse => "nmse",
            MetricName::SumSe => "sum_se",
            MetricName::PerUeSe => "per_ue_se",
            MetricName::ResidualError => "residual_error",
            MetricName::PilotOverhead => "pilot_overhead",
        }
    }
}

/// One experiment sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRecord {
    pub experiment: String,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub scheme: String,
    pub ue_index: Option<usize>,
    pub metric: MetricName,
    pub value: f64,
    pub seed: u64,
}

impl MetricRecord {
    pub fn sweep_param(&self) -> String {
        format!("{}={}", self.sweep_name, self.sweep_value)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.experiment,
            self.sweep_param(),
            self.scheme,
            self.ue_index.map(|u| u.to_string()).unwrap_or_default(),
            self.metric.as_str(),
            self.value,
            self.seed
        )
    }

    /// The value is finite and the metric belongs to the experiment.
    pub fn is_valid(&self) -> bool {
        let metric_ok = match self.experiment.as_str() {
            "fig3" => self.metric == MetricName::Nmse,
            "fig4" => self.metric == MetricName::SumSe,
            "fig5" => self.metric == MetricName::PerUeSe,
            "calib" => matches!(
                self.metric,
                MetricName::ResidualError | MetricName::PilotOverhead
            ),
            _ => false,
        };
        metric_ok && self.value.is_finite()
    }
}

/// Records as CSV text with header.
pub fn records_to_csv(records: &[MetricRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

pub fn write_csv(path: &Path, records: &[MetricRecord]) -> Result<()> {
    std::fs::write(path, records_to_csv(records))?;
    Ok(())
}

/// Every configurable knob, one section per concern.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub scenario: ScenarioConfig,
    pub pathloss: PathLossParams,
    pub fig3: Fig3Config,
    pub fig4: Fig4Config,
    pub fig5: Fig5Config,
    pub calib: CalibConfig,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.fig3.validate()?;
        self.fig4.validate()?;
        self.fig5.validate(&self.scenario)?;
        self.calib.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Fig3,
    Fig4,
    Fig5,
    Calib,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Fig5 => "fig5",
            Experiment::Calib => "calib",
        }
    }

    /// Applies a `--trials` override to the experiment's trial knob.
    pub fn set_trials(self, cfg: &mut SimConfig, trials: usize) {
        match self {
            Experiment::Fig3 => cfg.fig3.prediction.trials = trials,
            Experiment::Fig4 => cfg.fig4.realizations = trials,
            Experiment::Fig5 => cfg.fig5.layouts = trials,
            Experiment::Calib => cfg.calib.trials = trials,
        }
    }

    pub fn run(self, cfg: &SimConfig, seed: u64) -> Result<Vec<MetricRecord>> {
        cfg.validate()?;
        match self {
            Experiment::Fig3 => run_fig3(cfg, seed),
            Experiment::Fig4 => run_fig4(cfg, seed).map(|d| d.records),
            Experiment::Fig5 => run_fig5(cfg, seed),
            Experiment::Calib => run_calib_demo(cfg, seed),
        }
    }
}

/// Fully resolved run description written next to the CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RunSidecar<'a> {
    pub experiment: &'a str,
    pub seed: u64,
    pub threads: Option<usize>,
    pub records: usize,
    pub config: &'a SimConfig,
}

/// `out.csv` → `out.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn write_sidecar(path: &Path, sidecar: &RunSidecar<'_>) -> Result<()> {
    let text = serde_json::to_string_pretty(sidecar).map_err(|e| SimError::Io(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_row_layout() {
        let r = MetricRecord {
            experiment: "fig5".into(),
            sweep_name: "layout".into(),
            sweep_value: 3.0,
            scheme: "none".into(),
            ue_index: Some(2),
            metric: MetricName::PerUeSe,
            value: 1.5,
            seed: 9,
        };
        assert_eq!(r.csv_row(), "fig5,layout=3,none,2,per_ue_se,1.5,9");
        assert!(r.is_valid());
        let agg = MetricRecord {
            ue_index: None,
            ..r.clone()
        };
        assert_eq!(agg.csv_row(), "fig5,layout=3,none,,per_ue_se,1.5,9");
        let bad = MetricRecord {
            value: f64::NAN,
            ..r
        };
        assert!(!bad.is_valid());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = SimConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(SimConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(SimConfig::from_toml_str("[scenario]\nnum_apps = 3\n").is_err());
        let cfg = SimConfig::from_toml_str("[scenario]\nnum_aps = 24\n").unwrap();
        assert_eq!(cfg.scenario.num_aps, 24);
        assert_eq!(cfg.scenario.num_ues, 8);
    }
}

//! Per-UE uplink SE under the clustering strategies.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MetricName, MetricRecord, SimConfig};
use crate::channel::sample_large_scale;
use crate::clustering::{
    cluster_by_distance, cluster_by_received_power, cluster_by_statistical_csi,
    evolutionary_game_cluster, strategy_space, ClusterAssignment, GameParams, HardenedSinr,
    PayoffEvaluator,
};
use crate::error::{Result, SimError};
use crate::rng::substream;
use crate::scenario::{generate_layout, ScenarioConfig};
use crate::transmission::{draw_channels, uplink_se, uplink_se_ue, UplinkCombining};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig5Config {
    pub num_ues: usize,
    pub area_side: f64,
    pub layouts: usize,
    /// Cluster size of the fixed-size selectors.
    pub cluster_size: usize,
    /// Log-normal error of the statistical-CSI estimates, dB.
    pub stat_error_db: f64,
    /// Small-scale realizations for the reported SE.
    pub channel_realizations: usize,
    /// Small-scale realizations behind the game's payoffs.
    pub payoff_realizations: usize,
    pub combining: UplinkCombining,
    pub game: GameParams,
}

impl Default for Fig5Config {
    fn default() -> Self {
        Self {
            num_ues: 4,
            area_side: 500.0,
            layouts: 200,
            cluster_size: 10,
            stat_error_db: 4.0,
            channel_realizations: 100,
            payoff_realizations: 64,
            combining: UplinkCombining::default(),
            game: GameParams::default(),
        }
    }
}

impl Fig5Config {
    pub fn validate(&self, sc: &ScenarioConfig) -> Result<()> {
        if self.num_ues == 0
            || self.layouts == 0
            || self.channel_realizations == 0
            || self.payoff_realizations == 0
        {
            return Err(SimError::Config("fig5 counts must be positive".into()));
        }
        if self.cluster_size == 0 || self.cluster_size > sc.num_aps {
            return Err(SimError::InvalidClusterSize {
                q: self.cluster_size,
                l: sc.num_aps,
            });
        }
        if !(self.area_side >= 0.0) || !(self.stat_error_db >= 0.0) {
            return Err(SimError::Config(
                "area_side and stat_error_db must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn scenario(&self, base: &ScenarioConfig) -> ScenarioConfig {
        ScenarioConfig {
            num_ues: self.num_ues,
            area_side: self.area_side,
            ..base.clone()
        }
    }
}

/// Uplink SE of a UE over a fixed set of channel realizations. Every UE
/// transmits regardless of the assignment, so a UE's SE depends only on its
/// own serving set.
pub struct UplinkEvaluator<'a> {
    pub realizations: &'a [DMatrix<Complex64>],
    pub ap_antennas: usize,
    pub power: f64,
    pub noise: f64,
    pub combining: UplinkCombining,
}

impl PayoffEvaluator for UplinkEvaluator<'_> {
    fn payoff(&self, ue: usize, serving_sets: &[&[usize]]) -> f64 {
        uplink_se_ue(
            self.realizations,
            ue,
            serving_sets[ue],
            self.ap_antennas,
            self.power,
            self.noise,
            self.combining,
        )
    }

    fn depends_on_others(&self) -> bool {
        false
    }
}

pub const FIG5_METHODS: [&str; 5] = [
    "distance",
    "statistical_csi",
    "received_power",
    "evolutionary",
    "none",
];

/// One per-UE SE record per (layout, method, UE).
pub fn run_fig5(cfg: &SimConfig, seed: u64) -> Result<Vec<MetricRecord>> {
    let f5 = &cfg.fig5;
    let sc = f5.scenario(&cfg.scenario);
    let n = sc.ap_antennas;
    let p = sc.tx_power_ul;
    let noise = sc.noise_power();
    let per_layout: Vec<Vec<MetricRecord>> = (0..f5.layouts)
        .into_par_iter()
        .map(|r| {
            let idx = r as u64;
            let mut rng = substream(seed, "fig5-layout", idx);
            let layout = generate_layout(&sc, &mut rng);
            let ls = sample_large_scale(&layout, &cfg.pathloss, &mut rng);
            let beta = &ls.beta;
            let draw = |tag: &str, count: usize| {
                let mut rng = substream(seed, tag, idx);
                (0..count)
                    .map(|_| draw_channels(beta, n, &mut rng))
                    .collect::<Vec<_>>()
            };
            let eval = draw("fig5-eval", f5.channel_realizations);
            let payoff_real = draw("fig5-payoff", f5.payoff_realizations);
            let q = f5.cluster_size;
            let approx = HardenedSinr {
                beta,
                ap_antennas: n,
                power: p,
                noise,
            };
            let spaces = (0..sc.num_ues)
                .map(|k| strategy_space(&approx, k, q, f5.game.top_m))
                .collect();
            let evaluator = UplinkEvaluator {
                realizations: &payoff_real,
                ap_antennas: n,
                power: p,
                noise,
                combining: f5.combining,
            };
            let game = evolutionary_game_cluster(
                spaces,
                &evaluator,
                &f5.game,
                &mut substream(seed, "fig5-game", idx),
            )?;
            let assignments: [ClusterAssignment; 5] = [
                cluster_by_distance(&layout, q)?,
                cluster_by_statistical_csi(
                    beta,
                    f5.stat_error_db,
                    q,
                    &mut substream(seed, "fig5-stat", idx),
                )?,
                cluster_by_received_power(beta, &vec![p; sc.num_ues], q)?,
                game.assignment,
                ClusterAssignment::all_aps(sc.num_aps, sc.num_ues),
            ];
            let mut out = Vec::with_capacity(5 * sc.num_ues);
            for (name, a) in FIG5_METHODS.iter().zip(&assignments) {
                for (k, se) in uplink_se(&eval, a, n, p, noise, f5.combining)
                    .into_iter()
                    .enumerate()
                {
                    out.push(MetricRecord {
                        experiment: "fig5".into(),
                        sweep_name: "layout".into(),
                        sweep_value: r as f64,
                        scheme: (*name).into(),
                        ue_index: Some(k),
                        metric: MetricName::PerUeSe,
                        value: se,
                        seed,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_layout.into_iter().flatten().collect())
}

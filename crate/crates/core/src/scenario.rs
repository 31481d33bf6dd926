//! Configuration constants, network geometry and elementary mobility formulas.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Boltzmann noise floor in dBm/Hz at room temperature.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Physical and simulation constants shared by every experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    /// System bandwidth in Hz.
    pub bandwidth: f64,
    /// Downlink transmit power per AP in W.
    pub tx_power_dl: f64,
    /// Uplink transmit power per UE in W.
    pub tx_power_ul: f64,
    /// Pilot transmit power in W.
    pub pilot_power: f64,
    pub num_aps: usize,
    pub num_ues: usize,
    pub ap_antennas: usize,
    /// Side of the square deployment area in m.
    pub area_side: f64,
    /// Sampling period in s.
    pub sample_period: f64,
    /// Pilot length in samples (channel uses).
    pub pilot_len: usize,
    /// Coherence block length in samples (channel uses).
    pub coherence_block: usize,
    /// Receiver noise figure in dB.
    pub noise_figure: f64,
    pub seed: u64,
    /// Propagation speed used by the Doppler formula, m/s.
    pub speed_of_light: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            carrier_freq: 2e9,
            bandwidth: 20e6,
            tx_power_dl: 0.2,
            tx_power_ul: 0.2,
            pilot_power: 0.2,
            num_aps: 40,
            num_ues: 8,
            ap_antennas: 2,
            area_side: 100.0,
            sample_period: 67e-6,
            pilot_len: 8,
            coherence_block: 200,
            noise_figure: 9.0,
            seed: 0,
            speed_of_light: 3e8,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_freq", self.carrier_freq),
            ("bandwidth", self.bandwidth),
            ("tx_power_dl", self.tx_power_dl),
            ("tx_power_ul", self.tx_power_ul),
            ("pilot_power", self.pilot_power),
            ("sample_period", self.sample_period),
            ("speed_of_light", self.speed_of_light),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.num_aps == 0 || self.num_ues == 0 || self.ap_antennas == 0 {
            return Err(SimError::Config(
                "num_aps, num_ues and ap_antennas must be at least 1".into(),
            ));
        }
        if !(self.area_side.is_finite() && self.area_side >= 0.0) {
            return Err(SimError::Config(format!(
                "area_side must be >= 0, got {}",
                self.area_side
            )));
        }
        if self.coherence_block == 0 || self.pilot_len > self.coherence_block {
            return Err(SimError::Config(format!(
                "pilot_len ({}) must not exceed coherence_block ({})",
                self.pilot_len, self.coherence_block
            )));
        }
        if !self.noise_figure.is_finite() {
            return Err(SimError::Config("noise_figure must be finite".into()));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        self.speed_of_light / self.carrier_freq
    }

    /// Receiver noise power in W over the full bandwidth.
    pub fn noise_power(&self) -> f64 {
        let dbm = THERMAL_NOISE_DBM_PER_HZ + 10.0 * self.bandwidth.log10() + self.noise_figure;
        10f64.powf((dbm - 30.0) / 10.0)
    }

    pub fn doppler(&self, speed: f64) -> f64 {
        doppler_frequency_with(speed, self.carrier_freq, self.speed_of_light)
    }
}

/// AP and UE positions plus per-link mobility parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub ap_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
    /// UE speeds in m/s.
    pub ue_speeds: Vec<f64>,
    /// Angle of arrival per link, indexed `[ue][ap]`, in `[0, 2π)`.
    pub aoa: Vec<Vec<f64>>,
}

impl Layout {
    /// Builds a layout from explicit positions. UEs are parked and the angle
    /// of arrival is the bearing of each AP seen from the UE, with motion
    /// assumed along the x axis.
    pub fn from_positions(ap_positions: Vec<[f64; 2]>, ue_positions: Vec<[f64; 2]>) -> Self {
        let aoa = ue_positions
            .iter()
            .map(|u| {
                ap_positions
                    .iter()
                    .map(|a| (a[1] - u[1]).atan2(a[0] - u[0]).rem_euclid(2.0 * PI) % (2.0 * PI))
                    .collect()
            })
            .collect();
        let ue_speeds = vec![0.0; ue_positions.len()];
        Self {
            ap_positions,
            ue_positions,
            ue_speeds,
            aoa,
        }
    }

    pub fn num_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    /// Euclidean distance between AP `l` and UE `k`.
    pub fn distance(&self, l: usize, k: usize) -> f64 {
        dist(self.ap_positions[l], self.ue_positions[k])
    }

    /// Euclidean distance between APs `i` and `j`.
    pub fn ap_distance(&self, i: usize, j: usize) -> f64 {
        dist(self.ap_positions[i], self.ap_positions[j])
    }

    pub fn with_speed(mut self, speed: f64) -> Self {
        self.ue_speeds.iter_mut().for_each(|v| *v = speed);
        self
    }
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Drops APs and UEs uniformly and independently in the square `[0, area_side]²`.
pub fn generate_layout<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Layout {
    let side = cfg.area_side;
    let mut draw = |n: usize| -> Vec<[f64; 2]> {
        (0..n)
            .map(|_| [side * rng.random::<f64>(), side * rng.random::<f64>()])
            .collect()
    };
    let aps = draw(cfg.num_aps);
    let ues = draw(cfg.num_ues);
    Layout::from_positions(aps, ues)
}

/// Maximum Doppler shift `v f_c / c` with `c = 3·10⁸ m/s`.
pub fn doppler_frequency(speed: f64, carrier_freq: f64) -> f64 {
    doppler_frequency_with(speed, carrier_freq, 3e8)
}

pub fn doppler_frequency_with(speed: f64, carrier_freq: f64, speed_of_light: f64) -> f64 {
    speed * carrier_freq / speed_of_light
}

/// Channel coherence time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoherenceTime {
    Finite(f64),
    /// Zero Doppler: the channel never decorrelates.
    Infinite,
}

impl CoherenceTime {
    pub fn seconds(self) -> Option<f64> {
        match self {
            CoherenceTime::Finite(t) => Some(t),
            CoherenceTime::Infinite => None,
        }
    }
}

/// Coherence time `3 / (16 f_D)`.
pub fn coherence_time(doppler: f64) -> CoherenceTime {
    if doppler > 0.0 {
        CoherenceTime::Finite(3.0 / (16.0 * doppler))
    } else {
        CoherenceTime::Infinite
    }
}

pub fn kmh_to_ms(v: f64) -> f64 {
    v / 3.6
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

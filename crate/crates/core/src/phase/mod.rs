//! Oscillator phase drift, calibration schedules and hierarchical
//! reciprocity calibration.

mod calibration;

pub use calibration::{
    argos_intra_cluster, build_calibration_network, global_tls_calibrate, hierarchical_calibrate,
    measure_pairs, residual_error, synthesize_hardware, tls_calibrate, AnchorRule, ArgosResult,
    CalibrationNetwork, CalibrationOutcome, CalibrationParams, HardwareCoefficients, Measurements,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::normal;

/// Per-device Wiener phases, all measured relative to the last calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    /// Phase per device antenna in rad.
    pub theta: Vec<f64>,
    /// Increment variance per channel use in rad².
    pub sigma2: f64,
    /// Channel uses since the last calibration, per device.
    pub uses_since_cal: Vec<u64>,
}

impl PhaseState {
    pub fn new(devices: usize, sigma2: f64) -> Self {
        Self {
            theta: vec![0.0; devices],
            sigma2,
            uses_since_cal: vec![0; devices],
        }
    }

    /// State with the increment variance given in dB.
    pub fn from_db(devices: usize, sigma2_db: f64) -> Self {
        Self::new(devices, 10f64.powf(sigma2_db / 10.0))
    }

    pub fn devices(&self) -> usize {
        self.theta.len()
    }

    /// Accumulated drift variance since the last calibration.
    pub fn accumulated_variance(&self) -> f64 {
        self.uses_since_cal.iter().copied().max().unwrap_or(0) as f64 * self.sigma2
    }

    /// Advances every device by one channel use.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let s = self.sigma2.sqrt();
        for (t, u) in self.theta.iter_mut().zip(self.uses_since_cal.iter_mut()) {
            if s > 0.0 {
                *t += s * normal(rng);
            }
            *u += 1;
        }
    }

    /// Advances `uses` channel uses at once; equal in distribution to
    /// `uses` calls of [`PhaseState::step`].
    pub fn advance<R: Rng + ?Sized>(&mut self, uses: u64, rng: &mut R) {
        let s = (uses as f64 * self.sigma2).sqrt();
        for (t, u) in self.theta.iter_mut().zip(self.uses_since_cal.iter_mut()) {
            if s > 0.0 {
                *t += s * normal(rng);
            }
            *u += uses;
        }
    }

    fn reset<R: Rng + ?Sized>(&mut self, residual_var: f64, rng: &mut R) {
        let s = residual_var.sqrt();
        for (t, u) in self.theta.iter_mut().zip(self.uses_since_cal.iter_mut()) {
            *t = if s > 0.0 { s * normal(rng) } else { 0.0 };
            *u = 0;
        }
    }
}

/// Functional form of [`PhaseState::step`].
pub fn step_phase<R: Rng + ?Sized>(state: &PhaseState, rng: &mut R) -> PhaseState {
    let mut next = state.clone();
    next.step(rng);
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationScheme {
    HighFreq {
        period: u64,
    },
    LowFreq {
        period: u64,
    },
    /// Calibrate once the accumulated drift variance reaches `threshold` rad².
    Dynamic {
        threshold: f64,
    },
}

impl CalibrationScheme {
    pub fn name(&self) -> &'static str {
        match self {
            CalibrationScheme::HighFreq { .. } => "high_freq",
            CalibrationScheme::LowFreq { .. } => "low_freq",
            CalibrationScheme::Dynamic { .. } => "dynamic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationPlan {
    pub scheme: CalibrationScheme,
    /// Channel uses consumed by one calibration event.
    pub cost_per_event: u64,
    /// Phase variance left behind by a calibration, rad².
    pub residual_var: f64,
}

impl CalibrationPlan {
    pub fn new(scheme: CalibrationScheme, cost_per_event: u64) -> Self {
        Self {
            scheme,
            cost_per_event,
            residual_var: 0.0,
        }
    }

    fn due(&self, state: &PhaseState) -> bool {
        let uses = state.uses_since_cal.iter().copied().max().unwrap_or(0);
        match self.scheme {
            CalibrationScheme::HighFreq { period } | CalibrationScheme::LowFreq { period } => {
                uses >= period
            }
            CalibrationScheme::Dynamic { threshold } => {
                state.sigma2 > 0.0 && uses as f64 * state.sigma2 >= threshold
            }
        }
    }
}

/// Channel uses between calibrations under `plan` at drift variance
/// `sigma2`, or `None` if the plan never calibrates within `cap` uses.
pub fn cycle_length(plan: &CalibrationPlan, sigma2: f64, cap: u64) -> Option<u64> {
    let mut probe = PhaseState {
        theta: vec![0.0],
        sigma2,
        uses_since_cal: vec![0],
    };
    match plan.scheme {
        CalibrationScheme::HighFreq { period } | CalibrationScheme::LowFreq { period } => {
            (period <= cap).then_some(period.max(1))
        }
        CalibrationScheme::Dynamic { threshold } => {
            if !(sigma2 > 0.0) {
                return None;
            }
            // Start just below the analytic crossing and walk up with the
            // same predicate maybe_calibrate uses.
            let guess = ((threshold / sigma2).floor() as u64)
                .saturating_sub(2)
                .max(1);
            if guess > cap {
                return None;
            }
            for n in guess..=cap {
                probe.uses_since_cal[0] = n;
                if plan.due(&probe) {
                    return Some(n);
                }
            }
            None
        }
    }
}

/// Calibrates if the plan says so; returns the channel uses spent.
pub fn maybe_calibrate<R: Rng + ?Sized>(
    state: &mut PhaseState,
    plan: &CalibrationPlan,
    rng: &mut R,
) -> u64 {
    if plan.due(state) {
        state.reset(plan.residual_var, rng);
        plan.cost_per_event
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn zero_variance_never_moves() {
        let mut rng = substream(0, "ph", 0);
        let mut s = PhaseState::new(4, 0.0);
        for _ in 0..1000 {
            s.step(&mut rng);
        }
        assert!(s.theta.iter().all(|&t| t == 0.0));
        assert_eq!(s.uses_since_cal, vec![1000; 4]);
    }

    #[test]
    fn high_freq_counts_events() {
        let mut rng = substream(0, "ph", 1);
        let plan = CalibrationPlan::new(CalibrationScheme::HighFreq { period: 80 }, 1);
        let mut s = PhaseState::new(2, 1e-3);
        let mut events = 0;
        for _ in 0..800 {
            s.step(&mut rng);
            events += maybe_calibrate(&mut s, &plan, &mut rng);
        }
        assert_eq!(events, 10);
    }

    #[test]
    fn dynamic_trigger_arithmetic() {
        let mut rng = substream(0, "ph", 2);
        let sigma2 = 1e-3;
        for tau in [0.0105, 0.05, 0.2] {
            let plan = CalibrationPlan::new(CalibrationScheme::Dynamic { threshold: tau }, 1);
            let mut s = PhaseState::new(1, sigma2);
            let mut first = None;
            for n in 1..=1000u64 {
                s.step(&mut rng);
                if maybe_calibrate(&mut s, &plan, &mut rng) > 0 {
                    first = Some(n);
                    break;
                }
            }
            let expect = (tau / sigma2 - 1e-9).ceil() as u64;
            assert_eq!(first, Some(expect), "tau={tau}");
        }
        let plan = CalibrationPlan::new(CalibrationScheme::Dynamic { threshold: 0.05 }, 1);
        let mut s = PhaseState::new(3, 0.0);
        let mut cost = 0;
        for _ in 0..10_000 {
            s.step(&mut rng);
            cost += maybe_calibrate(&mut s, &plan, &mut rng);
        }
        assert_eq!(cost, 0);
    }
}

//! Channel acquisition under mobility: MMSE pilot estimation, outdated CSI,
//! Kalman prediction on the AR state space and the predictor-antenna scheme.

use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{bessel_j0, fit_jakes, ArFadingModel};
use crate::error::{Result, SimError};
use crate::rng::{complex_normal, substream};
use crate::scenario::{db_to_linear, kmh_to_ms, ScenarioConfig};

/// Riccati iterations allowed before giving up on a steady state.
pub const MAX_RICCATI_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Outdated,
    Kalman,
    PredictorAntenna,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Outdated, Method::Kalman, Method::PredictorAntenna];

    pub fn name(self) -> &'static str {
        match self {
            Method::Outdated => "outdated",
            Method::Kalman => "kalman",
            Method::PredictorAntenna => "predictor_antenna",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEstimate {
    pub value: Complex64,
    pub error_var: f64,
    pub produced_at: u64,
    pub method: Method,
}

/// MMSE estimate of `h ~ CN(0, beta)` from `y = h + n`, `n ~ CN(0, beta/snr)`.
pub fn mmse_estimate<R: Rng + ?Sized>(
    true_h: Complex64,
    beta: f64,
    pilot_snr: f64,
    rng: &mut R,
) -> ChannelEstimate {
    let (value, error_var) = if pilot_snr <= 0.0 {
        (Complex64::new(0.0, 0.0), beta)
    } else if pilot_snr.is_infinite() {
        (true_h, 0.0)
    } else {
        let y = true_h + complex_normal(rng, beta / pilot_snr);
        (
            y * (pilot_snr / (1.0 + pilot_snr)),
            beta / (1.0 + pilot_snr),
        )
    };
    ChannelEstimate {
        value,
        error_var,
        produced_at: 0,
        method: Method::Outdated,
    }
}

/// NMSE of reusing an estimate made `lag` samples earlier,
/// `2(1 - ρ(lag))(1 - ε) + ε`, with `ρ` the model autocorrelation.
pub fn outdated_nmse(lag: usize, model: &ArFadingModel, est_error_var: f64) -> f64 {
    let rho = model.autocorrelation(lag)[lag];
    2.0 * (1.0 - rho) * (1.0 - est_error_var) + est_error_var
}

/// Measurement update: filtered covariance and gain from a predicted covariance.
fn measurement_update(p: &DMatrix<f64>, obs_noise_var: f64) -> (DMatrix<f64>, DVector<f64>) {
    let s = p[(0, 0)] + obs_noise_var;
    let col = p.column(0).into_owned();
    let gain = if s > 0.0 {
        &col / s
    } else {
        DVector::zeros(p.nrows())
    };
    let filtered = p - &gain * col.transpose();
    (filtered, gain)
}

/// Time update `F P Fᵀ + σ² e₁e₁ᵀ` for a companion matrix built from `coeffs`.
fn time_update(p: &DMatrix<f64>, coeffs: &[f64], innovation_var: f64) -> DMatrix<f64> {
    let m = coeffs.len();
    // Row 0 of F P is a·P; rows i>0 are row i-1 of P.
    let mut fp = DMatrix::zeros(m, m);
    for j in 0..m {
        fp[(0, j)] = (0..m).map(|i| coeffs[i] * p[(i, j)]).sum();
        for i in 1..m {
            fp[(i, j)] = p[(i - 1, j)];
        }
    }
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        out[(i, 0)] = (0..m).map(|j| fp[(i, j)] * coeffs[j]).sum();
        for j in 1..m {
            out[(i, j)] = fp[(i, j - 1)];
        }
    }
    out[(0, 0)] += innovation_var;
    out
}

/// Filtered error variance of `h[n]` for `steps` consecutive observations,
/// starting from the prior covariance `prior` of the state.
pub fn kalman_transient(
    coeffs: &[f64],
    innovation_var: f64,
    obs_noise_var: f64,
    prior: &DMatrix<f64>,
    steps: usize,
) -> Vec<f64> {
    let mut p = prior.clone();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (filtered, _) = measurement_update(&p, obs_noise_var);
        out.push(filtered[(0, 0)]);
        p = time_update(&filtered, coeffs, innovation_var);
    }
    out
}

/// Steady-state Kalman prediction on the companion state space.
#[derive(Debug, Clone)]
pub struct KalmanPrediction {
    /// Error variance of the `horizon`-step prediction (unit channel power).
    pub nmse: f64,
    /// Error variance of the filtered estimate of the current sample.
    pub filtered_nmse: f64,
    pub horizon: usize,
    /// Steady-state one-step predicted covariance (Riccati fixed point).
    pub predicted_covariance: DMatrix<f64>,
    pub predictor: KalmanPredictor,
}

/// Riccati iteration to the steady state, then `horizon` open-loop steps.
pub fn kalman_predict(
    model: &ArFadingModel,
    obs_noise_var: f64,
    horizon: usize,
) -> Result<KalmanPrediction> {
    if !model.is_stationary() {
        return Err(SimError::Numerical(
            "Kalman prediction needs a stationary model".into(),
        ));
    }
    let m = model.order();
    let a = model.coefficients();
    let q = model.innovation_var();
    let r = model.autocorrelation(m);
    let mut p = DMatrix::from_fn(m, m, |i, j| r[i.abs_diff(j)]);
    let mut converged = false;
    for _ in 0..MAX_RICCATI_ITERATIONS {
        let (filtered, _) = measurement_update(&p, obs_noise_var);
        let next = time_update(&filtered, a, q);
        let diff = (&next - &p).amax();
        let scale = next.amax().max(1e-300);
        p = next;
        if diff <= 1e-13 * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SimError::Numerical(format!(
            "Riccati iteration did not converge in {MAX_RICCATI_ITERATIONS} steps"
        )));
    }
    let (filtered, gain) = measurement_update(&p, obs_noise_var);
    let mut ph = filtered.clone();
    for _ in 0..horizon {
        ph = time_update(&ph, a, q);
    }
    Ok(KalmanPrediction {
        nmse: ph[(0, 0)],
        filtered_nmse: filtered[(0, 0)],
        horizon,
        predicted_covariance: p,
        predictor: KalmanPredictor::new(a.to_vec(), gain.iter().copied().collect()),
    })
}

/// Fixed-gain Kalman filter over complex observations, O(M) per sample.
#[derive(Debug, Clone)]
pub struct KalmanPredictor {
    coeffs: Vec<f64>,
    gain: Vec<f64>,
    state: Vec<Complex64>,
}

impl KalmanPredictor {
    pub fn new(coeffs: Vec<f64>, gain: Vec<f64>) -> Self {
        let m = coeffs.len();
        Self {
            coeffs,
            gain,
            state: vec![Complex64::new(0.0, 0.0); m],
        }
    }

    fn advance(coeffs: &[f64], x: &mut [Complex64]) {
        let head: Complex64 = coeffs.iter().zip(x.iter()).map(|(a, v)| v * *a).sum();
        x.rotate_right(1);
        x[0] = head;
    }

    /// Predict to the next sample and correct with observation `y`.
    pub fn update(&mut self, y: Complex64) {
        Self::advance(&self.coeffs, &mut self.state);
        let innov = y - self.state[0];
        for (x, k) in self.state.iter_mut().zip(&self.gain) {
            *x += innov * *k;
        }
    }

    /// Current filtered estimate of the newest sample.
    pub fn current(&self) -> Complex64 {
        self.state[0]
    }

    /// Prediction `horizon` samples ahead of the latest observation.
    pub fn predict(&self, horizon: usize) -> Complex64 {
        let mut x = self.state.clone();
        for _ in 0..horizon {
            Self::advance(&self.coeffs, &mut x);
        }
        x[0]
    }
}

/// Predictor-antenna geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorAntennaGeometry {
    /// Spacing between predictor and main antenna in m.
    pub antenna_spacing: f64,
    /// Channel variation not caused by UE motion, Hz.
    pub background_doppler: f64,
}

/// How the main antenna's data instant relates to the PA sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaTiming {
    /// The data instant is scheduled when the main antenna reaches the
    /// sampled PA position: no spatial mismatch, background variation over
    /// the exact travel time `δ/v`.
    Aligned,
    /// Data instants on the sample grid: retrieval lag rounded to whole
    /// samples, leaving a spatial mismatch `|δ - v n* T_s|`.
    SampleGrid,
}

/// Retrieval lag and effective correlation of a predictor-antenna link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaRetrieval {
    pub lag: usize,
    pub mismatch: f64,
    pub rho_eff: f64,
}

impl PaRetrieval {
    pub fn new(
        geometry: &PredictorAntennaGeometry,
        speed: f64,
        sample_period: f64,
        wavelength: f64,
        timing: PaTiming,
        max_history: usize,
    ) -> Result<Self> {
        let travel = geometry.antenna_spacing / (speed * sample_period);
        if !(speed > 0.0) || !travel.is_finite() || travel.round() >= max_history as f64 {
            return Err(SimError::InsufficientHistory {
                needed: if travel.is_finite() {
                    travel.round() as usize
                } else {
                    usize::MAX
                },
                available: max_history,
            });
        }
        let lag = travel.round() as usize;
        let (mismatch, bg_time) = match timing {
            PaTiming::Aligned => (0.0, geometry.antenna_spacing / speed),
            PaTiming::SampleGrid => (
                (geometry.antenna_spacing - speed * lag as f64 * sample_period).abs(),
                lag as f64 * sample_period,
            ),
        };
        let rho_eff = bessel_j0(2.0 * PI * mismatch / wavelength)
            * bessel_j0(2.0 * PI * geometry.background_doppler * bg_time);
        Ok(Self {
            lag,
            mismatch,
            rho_eff,
        })
    }

    /// Scales a retrieved PA estimate into a main-antenna prediction.
    pub fn predict(&self, pa_estimate: &ChannelEstimate) -> ChannelEstimate {
        let r2 = self.rho_eff * self.rho_eff;
        ChannelEstimate {
            value: pa_estimate.value * self.rho_eff,
            error_var: 1.0 - r2 * (1.0 - pa_estimate.error_var),
            produced_at: pa_estimate.produced_at + self.lag as u64,
            method: Method::PredictorAntenna,
        }
    }
}

/// Predicts the main antenna's channel from the PA estimate taken `n*`
/// samples earlier. `pa_history[0]` is the newest estimate.
pub fn predictor_antenna_predict(
    pa_history: &[ChannelEstimate],
    geometry: &PredictorAntennaGeometry,
    speed: f64,
    sample_period: f64,
    carrier_freq: f64,
    timing: PaTiming,
) -> Result<ChannelEstimate> {
    let wavelength = 3e8 / carrier_freq;
    let ret = PaRetrieval::new(
        geometry,
        speed,
        sample_period,
        wavelength,
        timing,
        pa_history.len(),
    )?;
    Ok(ret.predict(&pa_history[ret.lag]))
}

/// Parameters of the prediction comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictionParams {
    pub ar_order: usize,
    /// Per-symbol pilot SNR in dB.
    pub pilot_snr_db: f64,
    /// Pilot symbols combined into one channel observation.
    pub pilot_symbols: usize,
    /// Age of the stale estimate for the outdated-CSI benchmark, samples.
    pub aging_lag: usize,
    /// Kalman prediction horizon, samples.
    pub kalman_horizon: usize,
    /// Predictor-antenna spacing in wavelengths.
    pub antenna_spacing_wavelengths: f64,
    pub background_doppler: f64,
    pub pa_timing: PaTiming,
    /// Monte-Carlo trials per (speed, method) cell and repetition.
    pub trials: usize,
    /// Independent repetitions averaged per cell.
    pub repetitions: usize,
    pub burn_in: usize,
    /// Samples between consecutive trials along one trace.
    pub trial_spacing: usize,
}

impl Default for PredictionParams {
    fn default() -> Self {
        Self {
            ar_order: 10,
            pilot_snr_db: 30.0,
            pilot_symbols: 8,
            aging_lag: 20,
            kalman_horizon: 20,
            antenna_spacing_wavelengths: 1.5,
            background_doppler: 0.1,
            pa_timing: PaTiming::Aligned,
            trials: 10_000,
            repetitions: 5,
            burn_in: 2_000,
            trial_spacing: 25,
        }
    }
}

impl PredictionParams {
    pub fn validate(&self) -> Result<()> {
        if self.ar_order == 0
            || self.trials == 0
            || self.repetitions == 0
            || self.trial_spacing == 0
        {
            return Err(SimError::Config(
                "ar_order, trials, repetitions and trial_spacing must be positive".into(),
            ));
        }
        if self.pilot_symbols == 0 || !self.pilot_snr_db.is_finite() {
            return Err(SimError::Config(
                "pilot_symbols must be positive and pilot_snr_db finite".into(),
            ));
        }
        if !(self.antenna_spacing_wavelengths > 0.0) || !(self.background_doppler >= 0.0) {
            return Err(SimError::Config(
                "antenna spacing must be positive, background Doppler non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Effective SNR of one channel observation.
    pub fn observation_snr(&self) -> f64 {
        self.pilot_symbols as f64 * db_to_linear(self.pilot_snr_db)
    }

    pub fn estimation_nmse(&self) -> f64 {
        1.0 / (1.0 + self.observation_snr())
    }
}

/// Evaluation points spaced `spacing` samples apart after `burn_in`, each
/// compared with the truth `lag` samples later.
struct TrialSchedule {
    burn_in: usize,
    spacing: usize,
    trials: usize,
    lag: usize,
}

impl TrialSchedule {
    fn len(&self) -> usize {
        self.burn_in + self.spacing * self.trials + self.lag + 1
    }

    fn is_trial(&self, n: usize) -> bool {
        n >= self.burn_in
            && (n - self.burn_in).is_multiple_of(self.spacing)
            && (n - self.burn_in) / self.spacing < self.trials
    }
}

/// Monte-Carlo NMSE of reusing an MMSE estimate `lag` samples later.
pub fn mc_outdated_nmse<R: Rng + ?Sized>(
    model: &ArFadingModel,
    obs_snr: f64,
    lag: usize,
    trials: usize,
    spacing: usize,
    rng: &mut R,
) -> f64 {
    let sched = TrialSchedule {
        burn_in: 0,
        spacing,
        trials,
        lag,
    };
    let mut state = model.stationary_state(rng);
    let mut pending: VecDeque<(usize, Complex64)> = VecDeque::new();
    let mut acc = 0.0;
    for n in 0..sched.len() {
        let h = state.step(model, rng);
        while let Some(&(due, est)) = pending.front() {
            if due != n {
                break;
            }
            acc += (h - est).norm_sqr();
            pending.pop_front();
        }
        if sched.is_trial(n) {
            let est = mmse_estimate(h, 1.0, obs_snr, rng).value;
            if lag == 0 {
                acc += (h - est).norm_sqr();
            } else {
                pending.push_back((n + lag, est));
            }
        }
    }
    acc / trials as f64
}

/// Monte-Carlo NMSE of the steady-state Kalman predictor `horizon` samples ahead.
pub fn mc_kalman_nmse<R: Rng + ?Sized>(
    model: &ArFadingModel,
    prediction: &KalmanPrediction,
    obs_noise_var: f64,
    trials: usize,
    burn_in: usize,
    spacing: usize,
    rng: &mut R,
) -> f64 {
    let lag = prediction.horizon;
    let sched = TrialSchedule {
        burn_in,
        spacing,
        trials,
        lag,
    };
    let mut filter = prediction.predictor.clone();
    let mut state = model.stationary_state(rng);
    let mut pending: VecDeque<(usize, Complex64)> = VecDeque::new();
    let mut acc = 0.0;
    for n in 0..sched.len() {
        let h = state.step(model, rng);
        filter.update(h + complex_normal(rng, obs_noise_var));
        while let Some(&(due, pred)) = pending.front() {
            if due != n {
                break;
            }
            acc += (h - pred).norm_sqr();
            pending.pop_front();
        }
        if sched.is_trial(n) {
            let pred = filter.predict(lag);
            if lag == 0 {
                acc += (h - pred).norm_sqr();
            } else {
                pending.push_back((n + lag, pred));
            }
        }
    }
    acc / trials as f64
}

/// Monte-Carlo NMSE of the predictor-antenna scheme.
///
/// The PA channel follows the AR model; the main antenna's channel at the
/// data instant is `ρ_eff h_PA[n - n*] + √(1-ρ_eff²) w`. Pilot noise and `w`
/// come from `noise_rng`, so runs that share it share those draws.
#[allow(clippy::too_many_arguments)]
pub fn mc_pa_nmse<R: Rng + ?Sized, N: Rng + ?Sized>(
    model: &ArFadingModel,
    retrieval: &PaRetrieval,
    obs_snr: f64,
    trials: usize,
    spacing: usize,
    rng: &mut R,
    noise_rng: &mut N,
) -> f64 {
    let lag = retrieval.lag;
    let mut state = model.stationary_state(rng);
    let mut buffer: VecDeque<Complex64> = VecDeque::with_capacity(lag + 1);
    let rho = retrieval.rho_eff;
    let resid = (1.0 - rho * rho).max(0.0).sqrt();
    let mut acc = 0.0;
    let mut done = 0;
    let mut n = 0usize;
    while done < trials {
        let h = state.step(model, rng);
        buffer.push_front(h);
        if buffer.len() > lag + 1 {
            buffer.pop_back();
        }
        if buffer.len() == lag + 1 && n.is_multiple_of(spacing) {
            let h_pa = buffer[lag];
            let mut est = mmse_estimate(h_pa, 1.0, obs_snr, noise_rng);
            est.produced_at = (n - lag) as u64;
            let pred = retrieval.predict(&est);
            let h_main = h_pa * rho + complex_normal(noise_rng, 1.0) * resid;
            acc += (h_main - pred.value).norm_sqr();
            done += 1;
        }
        n += 1;
    }
    acc / trials as f64
}

/// One cell of an NMSE sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct NmseCell {
    pub speed_kmh: f64,
    pub method: Method,
    pub nmse: f64,
}

/// Monte-Carlo NMSE for every (speed, method) pair. Cells run in parallel,
/// each on its own substream; output order follows the input order.
pub fn nmse_sweep(
    scenario: &ScenarioConfig,
    params: &PredictionParams,
    speeds_kmh: &[f64],
    methods: &[Method],
    seed: u64,
) -> Result<Vec<NmseCell>> {
    params.validate()?;
    let obs_snr = params.observation_snr();
    let ts = scenario.sample_period;
    let geometry = PredictorAntennaGeometry {
        antenna_spacing: params.antenna_spacing_wavelengths * scenario.wavelength(),
        background_doppler: params.background_doppler,
    };
    let cells: Vec<(f64, Method)> = speeds_kmh
        .iter()
        .flat_map(|&v| methods.iter().map(move |&m| (v, m)))
        .collect();
    cells
        .par_iter()
        .enumerate()
        .map(|(cell, &(v, method))| {
            let speed = kmh_to_ms(v);
            let model = fit_jakes(params.ar_order, scenario.doppler(speed), ts)?;
            let mut total = 0.0;
            for rep in 0..params.repetitions {
                let stream = (cell as u64) << 16 | rep as u64;
                let mut rng = substream(seed, "nmse-sweep", stream);
                total += match method {
                    Method::Outdated => mc_outdated_nmse(
                        &model,
                        obs_snr,
                        params.aging_lag,
                        params.trials,
                        params.trial_spacing,
                        &mut rng,
                    ),
                    Method::Kalman => {
                        let pred = kalman_predict(&model, 1.0 / obs_snr, params.kalman_horizon)?;
                        let spacing = params.trial_spacing.max(params.kalman_horizon + 1);
                        mc_kalman_nmse(
                            &model,
                            &pred,
                            1.0 / obs_snr,
                            params.trials,
                            params.burn_in,
                            spacing,
                            &mut rng,
                        )
                    }
                    Method::PredictorAntenna => {
                        let max_history = usize::MAX / 2;
                        let ret = PaRetrieval::new(
                            &geometry,
                            speed,
                            ts,
                            scenario.wavelength(),
                            params.pa_timing,
                            max_history,
                        )?;
                        // Shared across speeds so that the noise draws are common.
                        let mut noise = substream(seed, "nmse-sweep-pa-noise", rep as u64);
                        mc_pa_nmse(
                            &model,
                            &ret,
                            obs_snr,
                            params.trials,
                            params.trial_spacing,
                            &mut rng,
                            &mut noise,
                        )
                    }
                };
            }
            Ok(NmseCell {
                speed_kmh: v,
                method,
                nmse: total / params.repetitions as f64,
            })
        })
        .collect()
}

/// Closed-form NMSE for one (speed, method) cell, used as a reference curve.
pub fn analytic_nmse(
    scenario: &ScenarioConfig,
    params: &PredictionParams,
    speed_kmh: f64,
    method: Method,
) -> Result<f64> {
    let speed = kmh_to_ms(speed_kmh);
    let model = fit_jakes(
        params.ar_order,
        scenario.doppler(speed),
        scenario.sample_period,
    )?;
    let eps = params.estimation_nmse();
    match method {
        Method::Outdated => Ok(outdated_nmse(params.aging_lag, &model, eps)),
        Method::Kalman => Ok(kalman_predict(
            &model,
            1.0 / params.observation_snr(),
            params.kalman_horizon,
        )?
        .nmse),
        Method::PredictorAntenna => {
            let geometry = PredictorAntennaGeometry {
                antenna_spacing: params.antenna_spacing_wavelengths * scenario.wavelength(),
                background_doppler: params.background_doppler,
            };
            let ret = PaRetrieval::new(
                &geometry,
                speed,
                scenario.sample_period,
                scenario.wavelength(),
                params.pa_timing,
                usize::MAX / 2,
            )?;
            Ok(1.0 - ret.rho_eff * ret.rho_eff * (1.0 - eps))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::fit_ar_model_with_loading;

    #[test]
    fn mmse_limits() {
        let mut rng = substream(0, "mmse", 0);
        let h = Complex64::new(0.3, -1.2);
        let e = mmse_estimate(h, 1.0, f64::INFINITY, &mut rng);
        assert_eq!(e.value, h);
        assert_eq!(e.error_var, 0.0);
        let e = mmse_estimate(h, 1.0, 0.0, &mut rng);
        assert_eq!(e.value, Complex64::new(0.0, 0.0));
        assert_eq!(e.error_var, 1.0);
    }

    #[test]
    fn outdated_limits() {
        let model = fit_jakes(10, 185.0, 67e-6).unwrap();
        assert!(outdated_nmse(0, &model, 0.0).abs() < 1e-12);
        let white = fit_ar_model_with_loading(&[1.0, 0.0], 1, 0.0).unwrap();
        assert!((outdated_nmse(1, &white, 0.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kalman_ar1_noiseless_one_step() {
        let m = fit_ar_model_with_loading(&[1.0, 0.9], 1, 0.0).unwrap();
        let k = kalman_predict(&m, 0.0, 1).unwrap();
        assert!((k.nmse - 0.19).abs() < 1e-12);
        assert!(k.filtered_nmse.abs() < 1e-12);
    }

    #[test]
    fn kalman_constant_channel_error_vanishes() {
        let prior = DMatrix::from_element(1, 1, 1.0);
        let traj = kalman_transient(&[1.0], 0.0, 0.5, &prior, 2_000);
        assert!(traj.windows(2).all(|w| w[1] <= w[0]));
        // P_n = R / (n + R) for a constant channel with unit prior.
        assert!((traj[1999] - 0.5 / (2000.0 + 0.5)).abs() < 1e-9);
    }

    #[test]
    fn pa_perfect_retrace_is_exact() {
        let g = PredictorAntennaGeometry {
            antenna_spacing: 0.225,
            background_doppler: 0.0,
        };
        let ret = PaRetrieval::new(
            &g,
            0.225 / (100.0 * 67e-6),
            67e-6,
            0.15,
            PaTiming::SampleGrid,
            1000,
        )
        .unwrap();
        assert_eq!(ret.lag, 100);
        assert!(ret.mismatch < 1e-12);
        let est = ChannelEstimate {
            value: Complex64::new(1.0, 0.5),
            error_var: 0.0,
            produced_at: 0,
            method: Method::PredictorAntenna,
        };
        let p = ret.predict(&est);
        assert!(p.error_var.abs() < 1e-12);
        assert_eq!(p.value, est.value);
    }

    #[test]
    fn pa_parked_ue_has_no_usable_history() {
        let g = PredictorAntennaGeometry {
            antenna_spacing: 0.225,
            background_doppler: 0.1,
        };
        let hist = vec![
            ChannelEstimate {
                value: Complex64::new(0.0, 0.0),
                error_var: 0.0,
                produced_at: 0,
                method: Method::PredictorAntenna
            };
            64
        ];
        for v in [0.0, 1e-3] {
            let r = predictor_antenna_predict(&hist, &g, v, 67e-6, 2e9, PaTiming::Aligned);
            assert!(matches!(r, Err(SimError::InsufficientHistory { .. })));
        }
    }

    #[test]
    fn pa_equals_pilot_nmse_without_decorrelation() {
        let g = PredictorAntennaGeometry {
            antenna_spacing: 0.225,
            background_doppler: 0.0,
        };
        let ret = PaRetrieval::new(&g, 30.0, 67e-6, 0.15, PaTiming::Aligned, 10_000).unwrap();
        let est = ChannelEstimate {
            value: Complex64::new(1.0, 0.0),
            error_var: 1.25e-4,
            produced_at: 0,
            method: Method::Outdated,
        };
        assert!((ret.predict(&est).error_var - 1.25e-4).abs() < 1e-15);
    }
}

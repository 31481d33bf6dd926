//! Autoregressive Rayleigh fading with Jakes temporal correlation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use super::bessel::bessel_j0;
use crate::error::{Result, SimError};
use crate::rng::complex_normal;

/// Diagonal loading added to the zero-lag Yule-Walker entry.
pub const DEFAULT_LOADING: f64 = 1e-6;

/// Clarke/Jakes autocorrelation `J₀(2π f_D T_s lag)`.
pub fn jakes_autocorrelation(lag: f64, doppler: f64, sample_period: f64) -> f64 {
    bessel_j0(2.0 * PI * doppler * sample_period * lag)
}

/// Jakes autocorrelation at lags `0..=max_lag`.
pub fn jakes_sequence(max_lag: usize, doppler: f64, sample_period: f64) -> Vec<f64> {
    (0..=max_lag)
        .map(|n| jakes_autocorrelation(n as f64, doppler, sample_period))
        .collect()
}

/// Order-M autoregressive model `h[n] = Σ aᵢ h[n-i] + w[n]` with unit
/// stationary variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ArFadingModel {
    coeffs: Vec<f64>,
    innovation_var: f64,
    loading: f64,
    target: Vec<f64>,
}

impl ArFadingModel {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn innovation_var(&self) -> f64 {
        self.innovation_var
    }

    /// Autocorrelation the model was fitted to.
    pub fn target_autocorrelation(&self) -> &[f64] {
        &self.target
    }

    /// Companion-form transition matrix; the state is `[h[n-1], …, h[n-M]]`.
    pub fn companion_matrix(&self) -> DMatrix<f64> {
        let m = self.order();
        let mut f = DMatrix::zeros(m, m);
        for (j, &a) in self.coeffs.iter().enumerate() {
            f[(0, j)] = a;
        }
        for i in 1..m {
            f[(i, i - 1)] = 1.0;
        }
        f
    }

    /// Innovation loading vector `√σ² e₁`.
    pub fn innovation_loading(&self) -> DVector<f64> {
        let mut g = DVector::zeros(self.order());
        g[0] = self.innovation_var.sqrt();
        g
    }

    /// Reflection coefficients recovered from the AR coefficients by the
    /// step-down recursion.
    pub fn reflection_coefficients(&self) -> Vec<f64> {
        let m = self.order();
        let mut a = self.coeffs.clone();
        let mut k = vec![0.0; m];
        for p in (1..=m).rev() {
            let kp = a[p - 1];
            k[p - 1] = kp;
            let den = 1.0 - kp * kp;
            if den <= 0.0 {
                break;
            }
            let prev: Vec<f64> = (1..p)
                .map(|i| (a[i - 1] + kp * a[p - i - 1]) / den)
                .collect();
            a.truncate(p - 1);
            a.copy_from_slice(&prev);
        }
        k
    }

    /// All companion eigenvalues lie strictly inside the unit circle.
    pub fn is_stationary(&self) -> bool {
        self.reflection_coefficients().iter().all(|k| k.abs() < 1.0)
    }

    /// Model autocorrelation at lags `0..=max_lag`: the loaded fit target
    /// up to the model order, the AR recursion beyond it.
    pub fn autocorrelation(&self, max_lag: usize) -> Vec<f64> {
        let m = self.order();
        let scale = 1.0 + self.loading;
        let mut r = Vec::with_capacity(max_lag + 1);
        r.push(1.0);
        for n in 1..=max_lag {
            let v = if n <= m {
                self.target[n] / scale
            } else {
                self.coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, a)| a * r[n - 1 - i])
                    .sum()
            };
            r.push(v);
        }
        r
    }

    /// Draws a state from the stationary distribution.
    pub fn stationary_state<R: Rng + ?Sized>(&self, rng: &mut R) -> FadingState {
        let m = self.order();
        let r = self.autocorrelation(m);
        let cov = DMatrix::from_fn(m, m, |i, j| r[i.abs_diff(j)]);
        let chol = cov
            .cholesky()
            .expect("stationary covariance of a fitted model is positive definite");
        let lower = chol.l();
        let z: Vec<Complex64> = (0..m).map(|_| complex_normal(rng, 1.0)).collect();
        let history = (0..m)
            .map(|i| (0..=i).map(|j| z[j] * lower[(i, j)]).sum())
            .collect();
        FadingState { history, time: 0 }
    }

    pub fn zero_state(&self) -> FadingState {
        FadingState {
            history: vec![Complex64::new(0.0, 0.0); self.order()],
            time: 0,
        }
    }
}

/// Yule-Walker fit with the default diagonal loading.
pub fn fit_ar_model(autocorr: &[f64], order: usize) -> Result<ArFadingModel> {
    fit_ar_model_with_loading(autocorr, order, DEFAULT_LOADING)
}

/// Yule-Walker fit by Levinson-Durbin on the Toeplitz system whose zero-lag
/// entry is `1 + loading`. The innovation variance is set so that the
/// stationary variance equals one.
pub fn fit_ar_model_with_loading(
    autocorr: &[f64],
    order: usize,
    loading: f64,
) -> Result<ArFadingModel> {
    if order == 0 {
        return Err(SimError::ModelFit("order must be at least 1".into()));
    }
    if autocorr.len() <= order {
        return Err(SimError::ModelFit(format!(
            "need {} autocorrelation lags, got {}",
            order + 1,
            autocorr.len()
        )));
    }
    if (autocorr[0] - 1.0).abs() > 1e-12 {
        return Err(SimError::ModelFit(format!(
            "autocorr(0) must be 1, got {}",
            autocorr[0]
        )));
    }
    if !(loading >= 0.0) {
        return Err(SimError::ModelFit("loading must be non-negative".into()));
    }
    let r0 = 1.0 + loading;
    let mut a: Vec<f64> = Vec::with_capacity(order);
    let mut err = r0;
    for m in 1..=order {
        let acc: f64 = (1..m).map(|i| a[i - 1] * autocorr[m - i]).sum();
        let k = (autocorr[m] - acc) / err;
        let prev = a.clone();
        for i in 1..m {
            a[i - 1] = prev[i - 1] - k * prev[m - i - 1];
        }
        a.push(k);
        err *= 1.0 - k * k;
    }
    let innovation_var = err / r0;
    let model = ArFadingModel {
        coeffs: a,
        innovation_var,
        loading,
        target: autocorr[..=order].to_vec(),
    };
    if !model.coeffs.iter().all(|c| c.is_finite())
        || !innovation_var.is_finite()
        || innovation_var <= 0.0
    {
        return Err(SimError::ModelFit(
            "non-finite or degenerate Yule-Walker solution".into(),
        ));
    }
    if !model.is_stationary() {
        return Err(SimError::ModelFit("fitted model is not stationary".into()));
    }
    Ok(model)
}

/// Fits an AR model to the Jakes autocorrelation for one Doppler frequency.
pub fn fit_jakes(order: usize, doppler: f64, sample_period: f64) -> Result<ArFadingModel> {
    fit_ar_model(&jakes_sequence(order, doppler, sample_period), order)
}

/// The `M` most recent fading values of one link, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingState {
    pub history: Vec<Complex64>,
    /// Number of samples generated since the state was created.
    pub time: u64,
}

impl FadingState {
    /// Advances one sample and returns the new fading value.
    pub fn step<R: Rng + ?Sized>(&mut self, model: &ArFadingModel, rng: &mut R) -> Complex64 {
        debug_assert_eq!(self.history.len(), model.order());
        let mut h = complex_normal(rng, model.innovation_var);
        for (a, x) in model.coeffs.iter().zip(&self.history) {
            h += x * *a;
        }
        self.history.rotate_right(1);
        self.history[0] = h;
        self.time += 1;
        h
    }

    pub fn latest(&self) -> Complex64 {
        self.history[0]
    }
}

/// Functional form of [`FadingState::step`].
pub fn step_fading<R: Rng + ?Sized>(
    state: &FadingState,
    model: &ArFadingModel,
    rng: &mut R,
) -> (FadingState, Complex64) {
    let mut next = state.clone();
    let h = next.step(model, rng);
    (next, h)
}

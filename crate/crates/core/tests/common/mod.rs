//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// `J0` by its power series; accurate to ~1e-12 for `|x| <= 12`.
pub fn j0_series(x: f64) -> f64 {
    let q = -x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// Steady-state `horizon`-step Kalman prediction error for an AR model with
/// coefficients `a` and innovation variance `q`, observed in white noise of
/// variance `r`. The state is ordered oldest-first, the covariance starts
/// at zero, and the Riccati recursion runs in its plain (non-companion)
/// matrix form until it stops changing.
pub fn riccati_prediction_oracle(a: &[f64], q: f64, r: f64, horizon: usize) -> f64 {
    let m = a.len();
    // x_n = [h_{n-M+1}, ..., h_n]; h_{n+1} = Σ_i a_i h_{n+1-i}.
    let mut f = DMatrix::<f64>::zeros(m, m);
    for i in 0..m - 1 {
        f[(i, i + 1)] = 1.0;
    }
    for (i, &ai) in a.iter().enumerate() {
        f[(m - 1, m - 1 - i)] = ai;
    }
    let mut g = DVector::<f64>::zeros(m);
    g[m - 1] = 1.0;
    let qm = &g * g.transpose() * q;
    let hrow = g.transpose();
    let mut p = DMatrix::<f64>::zeros(m, m);
    for _ in 0..200_000 {
        let s = (&hrow * &p * &hrow.transpose())[(0, 0)] + r;
        let k = &p * hrow.transpose() / s;
        let filtered = &p - &k * &hrow * &p;
        let next = &f * &filtered * f.transpose() + &qm;
        let diff = (&next - &p).abs().max();
        p = next;
        if diff < 1e-15 {
            break;
        }
    }
    let s = (&hrow * &p * &hrow.transpose())[(0, 0)] + r;
    let k = &p * hrow.transpose() / s;
    let mut cov = &p - &k * &hrow * &p;
    for _ in 0..horizon {
        cov = &f * &cov * f.transpose() + &qm;
    }
    cov[(m - 1, m - 1)]
}

/// Empirical normalized autocorrelation `Re E[h_n conj(h_{n-k})] / E|h|²`.
pub fn empirical_autocorrelation(x: &[Complex64], max_lag: usize) -> Vec<f64> {
    let n = x.len() - max_lag;
    let power: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64;
    (0..=max_lag)
        .map(|k| (0..n).map(|i| (x[i + k] * x[i].conj()).re).sum::<f64>() / n as f64 / power)
        .collect()
}

/// Kolmogorov-Smirnov distance between samples and a continuous CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope and coefficient of determination of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, sxy * sxy / (sxx * syy))
}

/// Uplink SINR of UE `k` with SINR-optimal weights on per-AP MR outputs,
/// by direct inversion of the full interference-plus-noise covariance.
pub fn fused_sinr_oracle(
    g: &DMatrix<Complex64>,
    k: usize,
    serving: &[usize],
    n: usize,
    p: f64,
    noise: f64,
) -> f64 {
    let s = serving.len();
    let kk = g.ncols();
    let c = DMatrix::from_fn(s, kk, |i, j| {
        let l = serving[i];
        (l * n..(l + 1) * n)
            .map(|m| g[(m, k)].conj() * g[(m, j)])
            .sum::<Complex64>()
    });
    let b = DVector::from_fn(s, |i, _| c[(i, k)]);
    let mut cov = DMatrix::from_fn(s, s, |i, j| {
        if i == j {
            c[(i, k)] * noise
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    for j in (0..kk).filter(|&j| j != k) {
        let col = c.column(j);
        cov += col * col.adjoint() * Complex64::new(p, 0.0);
    }
    let x = cov.lu().solve(&b).expect("invertible covariance");
    p * b.dotc(&x).re
}

/// Plain MR SINR over all serving antennas.
pub fn mr_sinr_oracle(
    g: &DMatrix<Complex64>,
    k: usize,
    serving: &[usize],
    n: usize,
    p: f64,
    noise: f64,
) -> f64 {
    let rows: Vec<usize> = serving.iter().flat_map(|&l| l * n..(l + 1) * n).collect();
    let v: Vec<Complex64> = rows.iter().map(|&m| g[(m, k)]).collect();
    let inner = |j: usize| {
        rows.iter()
            .zip(&v)
            .map(|(&m, vi)| vi.conj() * g[(m, j)])
            .sum::<Complex64>()
    };
    let sig = inner(k).norm_sqr();
    let interf: f64 = (0..g.ncols())
        .filter(|&j| j != k)
        .map(|j| inner(j).norm_sqr())
        .sum();
    let vn: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    p * sig / (p * interf + noise * vn)
}

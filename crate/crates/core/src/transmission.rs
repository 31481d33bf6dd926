//! Precoding, spectral-efficiency evaluation under imperfect CSI and phase
//! drift, and rate splitting with successive interference cancellation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::ClusterAssignment;
use crate::prediction::mmse_estimate;
use crate::rng::complex_normal;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Rayleigh channels `g[(m, k)] ~ CN(0, beta[(l, k)])` for antenna `m` of AP
/// `l = m / ap_antennas`.
pub fn draw_channels<R: Rng + ?Sized>(
    beta: &DMatrix<f64>,
    ap_antennas: usize,
    rng: &mut R,
) -> DMatrix<Complex64> {
    let (l, k) = beta.shape();
    let mut g = DMatrix::from_element(l * ap_antennas, k, ZERO);
    for kk in 0..k {
        for m in 0..l * ap_antennas {
            g[(m, kk)] = complex_normal(rng, beta[(m / ap_antennas, kk)]);
        }
    }
    g
}

/// Per-link MMSE estimates from pilots with per-link SNR `snr(l, k)`.
pub fn estimate_channels<R: Rng + ?Sized>(
    g: &DMatrix<Complex64>,
    beta: &DMatrix<f64>,
    ap_antennas: usize,
    snr: impl Fn(usize, usize) -> f64,
    rng: &mut R,
) -> DMatrix<Complex64> {
    let mut est = g.clone();
    for kk in 0..g.ncols() {
        for m in 0..g.nrows() {
            let l = m / ap_antennas;
            est[(m, kk)] = mmse_estimate(g[(m, kk)], beta[(l, kk)], snr(l, kk), rng).value;
        }
    }
    est
}

/// How MRT precoders share an AP's power budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerNormalization {
    /// Each AP spends `power / K` on every UE it has a nonzero estimate for.
    EqualPerUe,
    /// Each AP scales its whole conjugate-estimate block to total `power`.
    PerAp,
}

/// Conjugate (MRT) precoders, power-normalized per AP.
pub fn mrt_precode(
    estimates: &DMatrix<Complex64>,
    ap_antennas: usize,
    power: f64,
    normalization: PowerNormalization,
) -> DMatrix<Complex64> {
    let (m_tot, k) = estimates.shape();
    let mut w = DMatrix::from_element(m_tot, k, ZERO);
    for l in 0..m_tot / ap_antennas {
        let rows = l * ap_antennas..(l + 1) * ap_antennas;
        match normalization {
            PowerNormalization::PerAp => {
                let norm: f64 = rows
                    .clone()
                    .flat_map(|m| (0..k).map(move |kk| (m, kk)))
                    .map(|(m, kk)| estimates[(m, kk)].norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                if norm > 0.0 {
                    let s = power.sqrt() / norm;
                    for m in rows.clone() {
                        for kk in 0..k {
                            w[(m, kk)] = estimates[(m, kk)].conj() * s;
                        }
                    }
                }
            }
            PowerNormalization::EqualPerUe => {
                for kk in 0..k {
                    let norm = rows
                        .clone()
                        .map(|m| estimates[(m, kk)].norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    if norm > 0.0 {
                        let s = (power / k as f64).sqrt() / norm;
                        for m in rows.clone() {
                            w[(m, kk)] = estimates[(m, kk)].conj() * s;
                        }
                    }
                }
            }
        }
    }
    w
}

/// Single network-wide MRT precoder toward UE `target`, full power per AP.
pub fn common_precoder(
    estimates: &DMatrix<Complex64>,
    ap_antennas: usize,
    power: f64,
    target: usize,
) -> DVector<Complex64> {
    let col = estimates.column(target).into_owned();
    let w = mrt_precode(
        &DMatrix::from_column_slice(col.len(), 1, col.as_slice()),
        ap_antennas,
        power,
        PowerNormalization::PerAp,
    );
    w.column(0).into_owned()
}

/// UE with the smallest aggregate large-scale gain.
pub fn weakest_ue(beta: &DMatrix<f64>) -> usize {
    (0..beta.ncols())
        .min_by(|&a, &b| {
            beta.column(a)
                .sum()
                .total_cmp(&beta.column(b).sum())
                .then(a.cmp(&b))
        })
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSplit {
    /// Fraction `t` of each AP's power spent on the common stream.
    pub common_fraction: f64,
}

impl PowerSplit {
    pub const PRIVATE_ONLY: PowerSplit = PowerSplit {
        common_fraction: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeReport {
    /// Private SE plus an equal share of the common SE, per UE.
    pub per_ue_se: Vec<f64>,
    pub private_se: Vec<f64>,
    pub common_se: f64,
    pub prefactor: f64,
    pub sum_se: f64,
}

impl SeReport {
    fn new(private_se: Vec<f64>, common_se: f64, prefactor: f64) -> Self {
        let k = private_se.len().max(1) as f64;
        let per_ue_se = private_se
            .iter()
            .map(|p| prefactor * (p + common_se / k))
            .collect();
        let sum_se = prefactor * (private_se.iter().sum::<f64>() + common_se);
        Self {
            per_ue_se,
            private_se,
            common_se,
            prefactor,
            sum_se,
        }
    }
}

/// Fraction of channel uses left for data: `1 - τ_p/τ_c - overhead_rate`.
pub fn prefactor(pilot_len: usize, coherence_block: usize, overhead_rate: f64) -> f64 {
    (1.0 - pilot_len as f64 / coherence_block as f64 - overhead_rate).max(0.0)
}

/// One downlink channel realization with its precoders.
///
/// The UE knows its effective gains as of the last calibration; drift since
/// then rotates the true gain away from that reference. Only the component
/// in phase with the reference adds coherently, the quadrature component
/// acts as self-interference.
#[derive(Debug, Clone)]
pub struct DownlinkRealization {
    pub channels: DMatrix<Complex64>,
    pub precoders: DMatrix<Complex64>,
    pub common: DVector<Complex64>,
    pub noise: f64,
    ref_private: Vec<Complex64>,
    ref_common: Vec<Complex64>,
}

/// Instantaneous rates at one drift state, per UE.
#[derive(Debug, Clone, PartialEq)]
pub struct InstantRates {
    pub private: Vec<f64>,
    pub common: Vec<f64>,
}

impl DownlinkRealization {
    pub fn new(
        channels: DMatrix<Complex64>,
        precoders: DMatrix<Complex64>,
        common: DVector<Complex64>,
        noise: f64,
    ) -> Self {
        let k = channels.ncols();
        let ref_private = (0..k)
            .map(|kk| channels.column(kk).dot(&precoders.column(kk)))
            .collect();
        let ref_common = (0..k).map(|kk| channels.column(kk).dot(&common)).collect();
        Self {
            channels,
            precoders,
            common,
            noise,
            ref_private,
            ref_common,
        }
    }

    pub fn num_ues(&self) -> usize {
        self.channels.ncols()
    }

    pub fn num_antennas(&self) -> usize {
        self.channels.nrows()
    }

    /// Rates for every power split in `splits` at drift phases `ap_phase`
    /// (per AP antenna) and `ue_phase` (per UE).
    pub fn rates(&self, ap_phase: &[f64], ue_phase: &[f64], splits: &[f64]) -> Vec<InstantRates> {
        let (m_tot, k) = self.channels.shape();
        let rot: Vec<Complex64> = ap_phase
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p))
            .collect();
        // b[(k, j)]: gain of stream j at UE k, common stream in column K.
        let mut b = DMatrix::from_element(k, k + 1, ZERO);
        for kk in 0..k {
            for m in 0..m_tot {
                let gr = self.channels[(m, kk)] * rot[m];
                for j in 0..k {
                    b[(kk, j)] += gr * self.precoders[(m, j)];
                }
                b[(kk, k)] += gr * self.common[m];
            }
            let u = Complex64::from_polar(1.0, -ue_phase[kk]);
            for j in 0..=k {
                b[(kk, j)] *= u;
            }
        }
        splits
            .iter()
            .map(|&t| {
                let mut private = Vec::with_capacity(k);
                let mut common = Vec::with_capacity(k);
                for kk in 0..k {
                    let (sig, quad) = in_phase(self.ref_private[kk], b[(kk, kk)]);
                    let others: f64 = (0..k)
                        .filter(|&j| j != kk)
                        .map(|j| b[(kk, j)].norm_sqr())
                        .sum();
                    let all_private = others + b[(kk, kk)].norm_sqr();
                    let den = (1.0 - t) * (quad + others) + self.noise;
                    private.push((1.0 + (1.0 - t) * sig / den).log2());
                    if t > 0.0 {
                        let (csig, cquad) = in_phase(self.ref_common[kk], b[(kk, k)]);
                        let cden = t * cquad + (1.0 - t) * all_private + self.noise;
                        common.push((1.0 + t * csig / cden).log2());
                    } else {
                        common.push(0.0);
                    }
                }
                InstantRates { private, common }
            })
            .collect()
    }
}

/// Squared in-phase and quadrature parts of `gain` relative to `reference`.
fn in_phase(reference: Complex64, gain: Complex64) -> (f64, f64) {
    let r = reference.norm();
    if r == 0.0 {
        return (0.0, gain.norm_sqr());
    }
    let p = reference.conj() * gain / r;
    (p.re * p.re, p.im * p.im)
}

/// Ergodic SE of one realization averaged over drift states, for each split.
/// The common rate is the minimum over UEs of their average common rates.
pub fn rate_splitting_se(
    real: &DownlinkRealization,
    phases: &[(Vec<f64>, Vec<f64>)],
    splits: &[PowerSplit],
    prefactor: f64,
) -> Vec<SeReport> {
    let k = real.num_ues();
    let ts: Vec<f64> = splits.iter().map(|s| s.common_fraction).collect();
    let mut private = vec![vec![0.0; k]; ts.len()];
    let mut common = vec![vec![0.0; k]; ts.len()];
    for (ap, ue) in phases {
        for (s, r) in real.rates(ap, ue, &ts).into_iter().enumerate() {
            for kk in 0..k {
                private[s][kk] += r.private[kk];
                common[s][kk] += r.common[kk];
            }
        }
    }
    let n = phases.len().max(1) as f64;
    (0..ts.len())
        .map(|s| {
            let p: Vec<f64> = private[s].iter().map(|x| x / n).collect();
            let c = if ts[s] > 0.0 {
                common[s]
                    .iter()
                    .map(|x| x / n)
                    .fold(f64::INFINITY, f64::min)
            } else {
                0.0
            };
            SeReport::new(p, if c.is_finite() { c } else { 0.0 }, prefactor)
        })
        .collect()
}

/// Ergodic downlink SE without rate splitting.
pub fn downlink_se(
    real: &DownlinkRealization,
    phases: &[(Vec<f64>, Vec<f64>)],
    prefactor: f64,
) -> SeReport {
    rate_splitting_se(real, phases, &[PowerSplit::PRIVATE_ONLY], prefactor).remove(0)
}

/// How the CPU fuses the per-AP maximum-ratio outputs of a serving set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UplinkCombining {
    /// Each serving AP applies MR locally and the CPU weights the AP outputs
    /// with the SINR-optimal linear weights. SE never decreases when an AP is
    /// added to the serving set.
    #[default]
    OptimalFusion,
    /// Plain MR over all serving antennas (unit AP weights).
    Mr,
}

/// Uplink SE of UE `k` served by the APs in `serving`, averaged over channel
/// realizations. Every UE transmits with power `power`; all UEs interfere
/// at every serving AP.
pub fn uplink_se_ue(
    realizations: &[DMatrix<Complex64>],
    k: usize,
    serving: &[usize],
    ap_antennas: usize,
    power: f64,
    noise: f64,
    combining: UplinkCombining,
) -> f64 {
    if serving.is_empty() || realizations.is_empty() {
        return 0.0;
    }
    let mut acc = 0.0;
    for g in realizations {
        let kk = g.ncols();
        // c[l][j] = g_lk^H g_lj, the local MR output coefficient of UE j at AP l.
        let c: Vec<Vec<Complex64>> = serving
            .iter()
            .map(|&l| {
                (0..kk)
                    .map(|j| {
                        (l * ap_antennas..(l + 1) * ap_antennas)
                            .map(|m| g[(m, k)].conj() * g[(m, j)])
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let sinr = match combining {
            UplinkCombining::Mr => mr_sinr(&c, k, power, noise),
            UplinkCombining::OptimalFusion => fused_sinr(&c, k, power, noise),
        };
        acc += (1.0 + sinr).log2();
    }
    acc / realizations.len() as f64
}

fn mr_sinr(c: &[Vec<Complex64>], k: usize, power: f64, noise: f64) -> f64 {
    let kk = c[0].len();
    let sum = |j: usize| c.iter().map(|row| row[j]).sum::<Complex64>();
    let signal = sum(k).re;
    let interf: f64 = (0..kk).filter(|&j| j != k).map(|j| sum(j).norm_sqr()).sum();
    let den = power * interf + noise * signal;
    if den > 0.0 {
        power * signal * signal / den
    } else {
        0.0
    }
}

/// `p bᵀ C⁻¹ b` with `b_l = ‖g_lk‖²` and `C = σ² diag(b) + p Σ_{j≠k} c_j c_jᴴ`,
/// evaluated through the Woodbury identity so only a `(K-1)²` system is solved.
fn fused_sinr(c: &[Vec<Complex64>], k: usize, power: f64, noise: f64) -> f64 {
    let kk = c[0].len();
    let rows: Vec<&Vec<Complex64>> = c.iter().filter(|row| row[k].re > 0.0).collect();
    if rows.is_empty() {
        return 0.0;
    }
    let others: Vec<usize> = (0..kk).filter(|&j| j != k).collect();
    let total: f64 = rows.iter().map(|row| row[k].re).sum();
    let base = power * total / noise;
    if others.is_empty() {
        return base;
    }
    let n = others.len();
    // With D = σ² diag(b) and U = √p [c_j]: w = Uᴴ D⁻¹ b, M = I + Uᴴ D⁻¹ U.
    let w = DVector::from_iterator(
        n,
        others.iter().map(|&j| {
            rows.iter().map(|row| row[j].conj()).sum::<Complex64>() * (power.sqrt() / noise)
        }),
    );
    let m = DMatrix::from_fn(n, n, |a, b| {
        let (i, j) = (others[a], others[b]);
        let s: Complex64 = rows
            .iter()
            .map(|row| row[i].conj() * row[j] / row[k].re)
            .sum();
        let eye = if a == b { 1.0 } else { 0.0 };
        Complex64::new(eye, 0.0) + s * (power / noise)
    });
    let correction = match m.cholesky() {
        Some(ch) => w.dotc(&ch.solve(&w)).re,
        None => return base,
    };
    power * (total / noise - correction).max(0.0)
}

/// Per-UE uplink SE for a cluster assignment.
pub fn uplink_se(
    realizations: &[DMatrix<Complex64>],
    assignment: &ClusterAssignment,
    ap_antennas: usize,
    power: f64,
    noise: f64,
    combining: UplinkCombining,
) -> Vec<f64> {
    assignment
        .serving_sets
        .iter()
        .enumerate()
        .map(|(k, s)| uplink_se_ue(realizations, k, s, ap_antennas, power, noise, combining))
        .collect()
}

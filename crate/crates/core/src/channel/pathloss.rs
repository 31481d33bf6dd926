//! Three-slope path loss and large-scale fading.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::normal;
use crate::scenario::Layout;

/// Parameters of the three-slope path-loss model plus log-normal shadowing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossParams {
    /// First breakpoint in m.
    pub d0: f64,
    /// Second breakpoint in m.
    pub d1: f64,
    /// Constant term in dB.
    pub l_const: f64,
    /// Shadowing standard deviation in dB, applied beyond `d1` only.
    pub shadow_sigma: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            d0: 10.0,
            d1: 50.0,
            l_const: 140.7,
            shadow_sigma: 8.0,
        }
    }
}

/// Path loss in dB at distance `d` metres.
///
/// Slope 35 beyond `d1`, slope 20 between `d0` and `d1`, flat below `d0`.
/// Distances enter the logarithms in km.
pub fn three_slope_pathloss(d: f64, p: &PathLossParams) -> f64 {
    let km = |m: f64| m.max(1e-3) / 1000.0;
    let dk = km(d);
    let (d0, d1) = (km(p.d0), km(p.d1));
    if dk > d1 {
        p.l_const + 35.0 * dk.log10()
    } else if dk > d0 {
        p.l_const + 15.0 * d1.log10() + 20.0 * dk.log10()
    } else {
        p.l_const + 15.0 * d1.log10() + 20.0 * d0.log10()
    }
}

/// Linear large-scale gains `beta[(l, k)]` between AP `l` and UE `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScale {
    pub beta: DMatrix<f64>,
    pub params: PathLossParams,
}

impl LargeScale {
    pub fn num_aps(&self) -> usize {
        self.beta.nrows()
    }

    pub fn num_ues(&self) -> usize {
        self.beta.ncols()
    }
}

/// Shadowed gains `10^((-PL(d) + s)/10)`, `s ~ N(0, σ²)` dB beyond `d1`.
pub fn sample_large_scale<R: Rng + ?Sized>(
    layout: &Layout,
    params: &PathLossParams,
    rng: &mut R,
) -> LargeScale {
    let (l, k) = (layout.num_aps(), layout.num_ues());
    let mut beta = DMatrix::zeros(l, k);
    for kk in 0..k {
        for ll in 0..l {
            let d = layout.distance(ll, kk);
            let shadow = if d > params.d1 {
                params.shadow_sigma * normal(rng)
            } else {
                0.0
            };
            beta[(ll, kk)] = 10f64.powf((-three_slope_pathloss(d, params) + shadow) / 10.0);
        }
    }
    LargeScale {
        beta,
        params: params.clone(),
    }
}

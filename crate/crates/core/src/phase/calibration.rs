//! Reciprocity calibration from bidirectional over-the-air measurements:
//! total least squares, averaged Argos, and the hierarchical combination of
//! the two over a clustered network.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{three_slope_pathloss, LargeScale, PathLossParams};
use crate::error::{Result, SimError};
use crate::rng::{complex_normal, normal};
use crate::scenario::{db_to_linear, Layout};

/// Transmit and receive hardware responses per node.
#[derive(Debug, Clone, PartialEq)]
pub struct HardwareCoefficients {
    pub tx: Vec<Complex64>,
    pub rx: Vec<Complex64>,
}

impl HardwareCoefficients {
    pub fn len(&self) -> usize {
        self.tx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tx.is_empty()
    }

    /// True calibration coefficient `t_i / r_i` of every node.
    pub fn calibration_coefficients(&self) -> Vec<Complex64> {
        self.tx.iter().zip(&self.rx).map(|(t, r)| t / r).collect()
    }
}

/// Log-normal magnitudes (`sigma_db` dB) and uniform phases.
pub fn synthesize_hardware<R: Rng + ?Sized>(
    nodes: usize,
    sigma_db: f64,
    rng: &mut R,
) -> HardwareCoefficients {
    let mut draw = || {
        let mag = 10f64.powf(sigma_db * normal(rng) / 20.0);
        Complex64::from_polar(mag, 2.0 * PI * rng.random::<f64>())
    };
    let tx = (0..nodes).map(|_| draw()).collect();
    let rx = (0..nodes).map(|_| draw()).collect();
    HardwareCoefficients { tx, rx }
}

/// Bidirectional measurements; `y[i][j]` is what node `j` received from node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    y: Vec<Vec<Option<Complex64>>>,
}

impl Measurements {
    pub fn empty(nodes: usize) -> Self {
        Self {
            y: vec![vec![None; nodes]; nodes],
        }
    }

    pub fn nodes(&self) -> usize {
        self.y.len()
    }

    pub fn get(&self, from: usize, to: usize) -> Option<Complex64> {
        self.y[from][to]
    }

    pub fn set(&mut self, from: usize, to: usize, value: Complex64) {
        self.y[from][to] = Some(value);
    }

    /// Pairs `(i, j)`, `i < j`, measured in both directions.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.nodes();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.y[i][j].is_some() && self.y[j][i].is_some() {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Measures each listed pair over a reciprocal channel of unit gain with
/// noise variance `1/snr(i, j)`: `y_ij = t_i h_ij r_j + n`.
pub fn measure_pairs<R: Rng + ?Sized>(
    hw: &HardwareCoefficients,
    pairs: &[(usize, usize)],
    snr: impl Fn(usize, usize) -> f64,
    rng: &mut R,
) -> Measurements {
    let mut m = Measurements::empty(hw.len());
    for &(i, j) in pairs {
        let h = Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>());
        let nv = 1.0 / snr(i, j);
        let (n1, n2) = if nv > 0.0 {
            (complex_normal(rng, nv), complex_normal(rng, nv))
        } else {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        };
        m.set(i, j, hw.tx[i] * h * hw.rx[j] + n1);
        m.set(j, i, hw.tx[j] * h * hw.rx[i] + n2);
    }
    m
}

/// Relative singular-value gap below which the null space counts as
/// more than one-dimensional.
const TLS_RANK_TOL: f64 = 1e-9;

/// Total-least-squares calibration over `nodes`, a subset of the measured
/// nodes. Stacks `c_i y_ji - c_j y_ij = 0` for every measured pair and takes
/// the right singular vector of the smallest singular value, normalized so
/// that `nodes[reference]` has coefficient 1.
pub fn tls_calibrate(
    meas: &Measurements,
    nodes: &[usize],
    reference: usize,
) -> Result<Vec<Complex64>> {
    let n = nodes.len();
    if n < 2 {
        return Err(SimError::Calibration("TLS needs at least two nodes".into()));
    }
    let mut rows: Vec<(usize, Complex64, usize, Complex64)> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let (i, j) = (nodes[a], nodes[b]);
            if let (Some(yij), Some(yji)) = (meas.get(i, j), meas.get(j, i)) {
                rows.push((a, yji, b, -yij));
            }
        }
    }
    let m = rows.len().max(n);
    let mut mat = DMatrix::<Complex64>::zeros(m, n);
    for (r, &(a, va, b, vb)) in rows.iter().enumerate() {
        mat[(r, a)] = va;
        mat[(r, b)] = vb;
    }
    let svd = mat.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| SimError::Calibration("SVD did not return right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    let smax = svd.singular_values[order[n - 1]];
    let second = svd.singular_values[order[1]];
    if !(second > TLS_RANK_TOL * smax) {
        return Err(SimError::Calibration(format!(
            "measurement matrix null space has dimension > 1 (singular values {second:.3e} vs {smax:.3e})"
        )));
    }
    let row = order[0];
    let v: Vec<Complex64> = (0..n).map(|c| v_t[(row, c)].conj()).collect();
    let refv = v[reference];
    if refv.norm() < 1e-300 {
        return Err(SimError::Calibration(
            "reference coefficient vanished".into(),
        ));
    }
    Ok(v.iter().map(|x| x / refv).collect())
}

/// Least-squares estimate of `c_i` from the opposite-group members `others`
/// with known coefficients: `Σ c_j y_ij conj(y_ji) / Σ |y_ji|²`.
fn averaged_ratio(
    meas: &Measurements,
    i: usize,
    others: &[(usize, Complex64)],
) -> Option<(Complex64, usize)> {
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    let mut used = 0;
    for &(j, cj) in others {
        if let (Some(yij), Some(yji)) = (meas.get(i, j), meas.get(j, i)) {
            num += cj * yij * yji.conj();
            den += yji.norm_sqr();
            used += 1;
        }
    }
    (used > 0 && den > 0.0).then(|| (num / den, used))
}

/// Output of averaged Argos calibration within one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgosResult {
    /// `(node, coefficient)` relative to the anchor, anchor first.
    pub coefficients: Vec<(usize, Complex64)>,
    /// Measurement ratios averaged into each node's final estimate.
    pub ratios_used: Vec<(usize, usize)>,
}

impl ArgosResult {
    pub fn coefficient(&self, node: usize) -> Option<Complex64> {
        self.coefficients
            .iter()
            .find(|(n, _)| *n == node)
            .map(|(_, c)| *c)
    }

    pub fn ratios(&self, node: usize) -> Option<usize> {
        self.ratios_used
            .iter()
            .find(|(n, _)| *n == node)
            .map(|(_, r)| *r)
    }
}

/// Averaged Argos calibration of a cluster split into two groups.
///
/// The anchor is fixed to 1. Members of the anchor's opposite group start
/// from their ratio to the anchor; members of the anchor's group are then
/// averaged over the whole opposite group, and finally the opposite group
/// is refined by averaging over the anchor's group.
pub fn argos_intra_cluster(
    meas: &Measurements,
    group_a: &[usize],
    group_b: &[usize],
    anchor: usize,
) -> Result<ArgosResult> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(SimError::Grouping("both groups must be non-empty".into()));
    }
    let (own, opp) = if group_a.contains(&anchor) {
        (group_a, group_b)
    } else if group_b.contains(&anchor) {
        (group_b, group_a)
    } else {
        return Err(SimError::Grouping(format!(
            "anchor {anchor} is in neither group"
        )));
    };
    let one = Complex64::new(1.0, 0.0);
    let missing = |i: usize| SimError::Calibration(format!("node {i} has no usable measurements"));
    let mut opp_c: Vec<(usize, Complex64)> = Vec::with_capacity(opp.len());
    for &b in opp {
        let (c, _) = averaged_ratio(meas, b, &[(anchor, one)]).ok_or_else(|| missing(b))?;
        opp_c.push((b, c));
    }
    let mut own_c: Vec<(usize, Complex64)> = vec![(anchor, one)];
    let mut ratios = vec![(anchor, 0)];
    for &a in own.iter().filter(|&&a| a != anchor) {
        let (c, used) = averaged_ratio(meas, a, &opp_c).ok_or_else(|| missing(a))?;
        own_c.push((a, c));
        ratios.push((a, used));
    }
    let mut refined = Vec::with_capacity(opp.len());
    for &(b, _) in &opp_c {
        let (c, used) = averaged_ratio(meas, b, &own_c).ok_or_else(|| missing(b))?;
        refined.push((b, c));
        ratios.push((b, used));
    }
    own_c.extend(refined);
    Ok(ArgosResult {
        coefficients: own_c,
        ratios_used: ratios,
    })
}

/// How each cluster picks its anchor AP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorRule {
    /// Anchors chosen jointly to minimize `trace(L⁺)` of the link-SNR
    /// Laplacian among anchors, the first-order error of the anchor TLS.
    /// Coordinate descent starting from the `InterClusterLink` choice.
    #[default]
    AnchorGraph,
    /// Strongest aggregate inter-AP link SNR to APs outside the cluster,
    /// which keeps the anchor exchange on short links.
    InterClusterLink,
    /// Largest aggregate large-scale gain `Σ_k beta[l,k]` towards the UEs.
    UeGain,
}

/// Settings for building and measuring a calibration network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationParams {
    /// APs per UE serving set used to form clusters.
    pub serving_set_size: usize,
    /// Jaccard overlap above which two clusters are merged.
    pub merge_overlap: f64,
    /// Inter-AP measurement SNR at or below the reference distance, dB.
    pub measurement_snr_db: f64,
    /// Hardware magnitude spread in dB.
    pub hardware_sigma_db: f64,
    pub anchor_rule: AnchorRule,
    /// Anchors of disjoint clusters share a pilot only when their mutual
    /// link SNR is below this level, dB; a reused pilot means the two
    /// anchors never measure each other.
    pub pilot_reuse_snr_db: f64,
}

impl Default for CalibrationParams {
    fn default() -> Self {
        Self {
            serving_set_size: 5,
            merge_overlap: 0.3,
            measurement_snr_db: 30.0,
            hardware_sigma_db: 0.5,
            anchor_rule: AnchorRule::default(),
            pilot_reuse_snr_db: 0.0,
        }
    }
}

/// APs grouped for hierarchical calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationNetwork {
    /// Member APs per cluster; clusters may overlap.
    pub clusters: Vec<Vec<usize>>,
    /// Cluster whose calibration determines each AP's coefficient.
    pub home: Vec<usize>,
    pub anchors: Vec<usize>,
    pub pilot_colors: Vec<usize>,
    pub hardware: HardwareCoefficients,
    /// Linear measurement SNR per AP pair.
    pub link_snr: DMatrix<f64>,
}

impl CalibrationNetwork {
    pub fn num_aps(&self) -> usize {
        self.home.len()
    }

    pub fn num_colors(&self) -> usize {
        self.pilot_colors.iter().copied().max().map_or(0, |c| c + 1)
    }

    /// Clusters `c` and `d` share at least one AP.
    pub fn intersects(&self, c: usize, d: usize) -> bool {
        self.clusters[c]
            .iter()
            .any(|a| self.clusters[d].contains(a))
    }

    /// Builds a network from explicit clusters, picking one anchor per
    /// cluster by `params.anchor_rule` among members that are not already
    /// another cluster's anchor.
    pub fn from_clusters<R: Rng + ?Sized>(
        layout: &Layout,
        gains: &LargeScale,
        clusters: Vec<Vec<usize>>,
        params: &CalibrationParams,
        pathloss: &PathLossParams,
        rng: &mut R,
    ) -> Result<Self> {
        let l = layout.num_aps();
        let snr0 = db_to_linear(params.measurement_snr_db);
        let pl_ref = three_slope_pathloss(0.0, pathloss);
        let link_snr = DMatrix::from_fn(l, l, |i, j| {
            if i == j {
                0.0
            } else {
                snr0 * db_to_linear(
                    pl_ref - three_slope_pathloss(layout.ap_distance(i, j), pathloss),
                )
            }
        });
        let score = |a: usize, cl: &[usize]| match params.anchor_rule {
            AnchorRule::UeGain => gains.beta.row(a).sum(),
            AnchorRule::InterClusterLink | AnchorRule::AnchorGraph => (0..l)
                .filter(|b| !cl.contains(b))
                .map(|b| link_snr[(a, b)])
                .sum(),
        };
        let mut kept: Vec<Vec<usize>> = Vec::new();
        let mut anchors: Vec<usize> = Vec::new();
        for cl in clusters {
            let best = cl
                .iter()
                .copied()
                .filter(|a| !anchors.contains(a))
                .map(|a| (a, score(a, &cl)))
                .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)));
            if let Some((a, _)) = best {
                anchors.push(a);
                kept.push(cl);
            }
        }
        if kept.is_empty() {
            return Err(SimError::Calibration("no clusters".into()));
        }
        if params.anchor_rule == AnchorRule::AnchorGraph {
            refine_anchors(&kept, &mut anchors, &link_snr);
        }
        let mut home = vec![usize::MAX; l];
        for (c, &a) in anchors.iter().enumerate() {
            home[a] = c;
        }
        for (c, cl) in kept.iter().enumerate() {
            for &a in cl {
                if home[a] == usize::MAX {
                    home[a] = c;
                }
            }
        }
        if let Some(orphan) = home.iter().position(|&h| h == usize::MAX) {
            return Err(SimError::Calibration(format!(
                "AP {orphan} belongs to no cluster"
            )));
        }
        let reuse_limit = db_to_linear(params.pilot_reuse_snr_db);
        let conflict = |c: usize, d: usize| {
            kept[c].iter().any(|a| kept[d].contains(a))
                || link_snr[(anchors[c], anchors[d])] >= reuse_limit
        };
        let pilot_colors = color_conflicts(kept.len(), conflict);
        let hardware = synthesize_hardware(l, params.hardware_sigma_db, rng);
        Ok(Self {
            clusters: kept,
            home,
            anchors,
            pilot_colors,
            hardware,
            link_snr,
        })
    }

    /// Splits cluster `c` into the anchor's group and the opposite group by
    /// alternating members in order of decreasing link SNR to the anchor.
    pub fn groups(&self, c: usize) -> (Vec<usize>, Vec<usize>) {
        let anchor = self.anchors[c];
        let mut others: Vec<usize> = self.clusters[c]
            .iter()
            .copied()
            .filter(|&a| a != anchor)
            .collect();
        others.sort_by(|&x, &y| {
            self.link_snr[(anchor, y)]
                .total_cmp(&self.link_snr[(anchor, x)])
                .then(x.cmp(&y))
        });
        let mut a = vec![anchor];
        let mut b = Vec::new();
        for (i, m) in others.into_iter().enumerate() {
            if i % 2 == 0 {
                b.push(m);
            } else {
                a.push(m);
            }
        }
        (a, b)
    }
}

/// `trace(L⁺)` of the Laplacian of the anchor graph weighted by link SNR;
/// infinite when the graph is disconnected.
fn anchor_exchange_cost(anchors: &[usize], link_snr: &DMatrix<f64>) -> f64 {
    let n = anchors.len();
    if n < 2 {
        return 0.0;
    }
    let lap = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            (0..n)
                .filter(|&k| k != i)
                .map(|k| link_snr[(anchors[i], anchors[k])])
                .sum()
        } else {
            -link_snr[(anchors[i], anchors[j])]
        }
    });
    let mut eig: Vec<f64> = lap.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let floor = 1e-9 * eig[n - 1].max(f64::MIN_POSITIVE);
    if eig[1] <= floor {
        return f64::INFINITY;
    }
    eig[1..].iter().map(|v| 1.0 / v).sum()
}

/// Coordinate descent on the anchor exchange cost: each cluster in turn
/// moves its anchor to the member that lowers the cost most, until no move
/// helps.
fn refine_anchors(clusters: &[Vec<usize>], anchors: &mut [usize], link_snr: &DMatrix<f64>) {
    let mut cost = anchor_exchange_cost(anchors, link_snr);
    for _ in 0..50 {
        let mut moved = false;
        for c in 0..clusters.len() {
            for &cand in &clusters[c] {
                if anchors.contains(&cand) {
                    continue;
                }
                let prev = anchors[c];
                anchors[c] = cand;
                let trial = anchor_exchange_cost(anchors, link_snr);
                if trial < cost * (1.0 - 1e-12) {
                    cost = trial;
                    moved = true;
                } else {
                    anchors[c] = prev;
                }
            }
        }
        if !moved {
            break;
        }
    }
}

/// Greedy proper coloring of a conflict graph over `n` clusters, with at
/// least two colors whenever `n ≥ 2` so that every anchor both transmits
/// and listens during the anchor exchange.
fn color_conflicts(n: usize, meets: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut colors: Vec<usize> = Vec::with_capacity(n);
    for c in 0..n {
        let used: Vec<usize> = (0..c).filter(|&d| meets(c, d)).map(|d| colors[d]).collect();
        let color = (0..).find(|k| !used.contains(k)).unwrap();
        colors.push(color);
    }
    if n >= 2 && colors.iter().all(|&k| k == 0) {
        colors[n - 1] = 1;
    }
    colors
}

/// Clusters from merged UE serving sets, anchors, pilot colors and
/// synthetic hardware for a layout.
pub fn build_calibration_network<R: Rng + ?Sized>(
    layout: &Layout,
    gains: &LargeScale,
    params: &CalibrationParams,
    pathloss: &PathLossParams,
    rng: &mut R,
) -> Result<CalibrationNetwork> {
    let l = layout.num_aps();
    let q = params.serving_set_size.clamp(1, l);
    let mut clusters: Vec<Vec<usize>> = (0..layout.num_ues())
        .map(|k| {
            let mut idx: Vec<usize> = (0..l).collect();
            idx.sort_by(|&x, &y| {
                gains.beta[(y, k)]
                    .total_cmp(&gains.beta[(x, k)])
                    .then(x.cmp(&y))
            });
            let mut s = idx[..q].to_vec();
            s.sort_unstable();
            s
        })
        .collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for c in 0..clusters.len() {
            for d in c + 1..clusters.len() {
                let j = jaccard(&clusters[c], &clusters[d]);
                if j >= params.merge_overlap && best.is_none_or(|(bj, _, _)| j > bj) {
                    best = Some((j, c, d));
                }
            }
        }
        let Some((_, c, d)) = best else { break };
        let moved = clusters.remove(d);
        clusters[c].extend(moved);
        clusters[c].sort_unstable();
        clusters[c].dedup();
    }
    // Attach uncovered APs to the cluster of their nearest covered AP.
    let covered: Vec<bool> = (0..l)
        .map(|a| clusters.iter().any(|c| c.contains(&a)))
        .collect();
    let mut additions: Vec<(usize, usize)> = Vec::new();
    for a in (0..l).filter(|&a| !covered[a]) {
        let nearest = (0..l)
            .filter(|&b| covered[b])
            .min_by(|&x, &y| {
                layout
                    .ap_distance(a, x)
                    .total_cmp(&layout.ap_distance(a, y))
                    .then(x.cmp(&y))
            })
            .expect("at least one AP is covered");
        let c = clusters
            .iter()
            .position(|cl| cl.contains(&nearest))
            .unwrap();
        additions.push((c, a));
    }
    for (c, a) in additions {
        clusters[c].push(a);
    }
    clusters.iter_mut().for_each(|c| c.sort_unstable());
    CalibrationNetwork::from_clusters(layout, gains, clusters, params, pathloss, rng)
}

fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let inter = a.iter().filter(|x| b.contains(x)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Mean squared relative deviation from the truth after the best common
/// complex scaling of the estimates.
pub fn residual_error(estimate: &[Complex64], truth: &[Complex64]) -> f64 {
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for (e, t) in estimate.iter().zip(truth) {
        let w = 1.0 / t.norm_sqr();
        num += e.conj() * t * w;
        den += e.norm_sqr() * w;
    }
    let alpha = if den > 0.0 {
        num / den
    } else {
        Complex64::new(0.0, 0.0)
    };
    estimate
        .iter()
        .zip(truth)
        .map(|(e, t)| (alpha * e - t).norm_sqr() / t.norm_sqr())
        .sum::<f64>()
        / truth.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    pub coefficients: Vec<Complex64>,
    pub residual_error: f64,
    /// Calibration pilot uses.
    pub pilot_overhead: usize,
}

/// Anchors calibrated by TLS over pilot-colored exchanges, clusters by
/// averaged Argos, composed into network-wide coefficients.
pub fn hierarchical_calibrate<R: Rng + ?Sized>(
    net: &CalibrationNetwork,
    rng: &mut R,
) -> Result<CalibrationOutcome> {
    let l = net.num_aps();
    let snr = |i: usize, j: usize| net.link_snr[(i, j)];
    let n_anchor = net.anchors.len();
    let anchor_c: Vec<Complex64> = if n_anchor == 1 {
        vec![Complex64::new(1.0, 0.0)]
    } else {
        let mut pairs = Vec::new();
        for a in 0..n_anchor {
            for b in a + 1..n_anchor {
                if net.pilot_colors[a] != net.pilot_colors[b] {
                    pairs.push((net.anchors[a], net.anchors[b]));
                }
            }
        }
        let meas = measure_pairs(&net.hardware, &pairs, snr, rng);
        tls_calibrate(&meas, &net.anchors, 0)?
    };
    let mut overhead = if n_anchor > 1 { net.num_colors() } else { 0 };
    let mut coeffs = vec![Complex64::new(0.0, 0.0); l];
    for c in 0..net.clusters.len() {
        let (ga, gb) = net.groups(c);
        let relative = if gb.is_empty() {
            None
        } else {
            let pairs: Vec<(usize, usize)> = ga
                .iter()
                .flat_map(|&a| gb.iter().map(move |&b| (a, b)))
                .collect();
            overhead += pairs.len();
            let meas = measure_pairs(&net.hardware, &pairs, snr, rng);
            Some(argos_intra_cluster(&meas, &ga, &gb, net.anchors[c])?)
        };
        for &ap in &net.clusters[c] {
            if net.home[ap] != c {
                continue;
            }
            let rel = if ap == net.anchors[c] {
                Complex64::new(1.0, 0.0)
            } else {
                relative
                    .as_ref()
                    .and_then(|r| r.coefficient(ap))
                    .expect("member calibrated")
            };
            coeffs[ap] = anchor_c[c] * rel;
        }
    }
    let truth = net.hardware.calibration_coefficients();
    Ok(CalibrationOutcome {
        residual_error: residual_error(&coeffs, &truth),
        coefficients: coeffs,
        pilot_overhead: overhead,
    })
}

/// TLS over every AP pair of the network.
pub fn global_tls_calibrate<R: Rng + ?Sized>(
    net: &CalibrationNetwork,
    rng: &mut R,
) -> Result<CalibrationOutcome> {
    let l = net.num_aps();
    let pairs: Vec<(usize, usize)> = (0..l)
        .flat_map(|i| (i + 1..l).map(move |j| (i, j)))
        .collect();
    let meas = measure_pairs(&net.hardware, &pairs, |i, j| net.link_snr[(i, j)], rng);
    let nodes: Vec<usize> = (0..l).collect();
    let coeffs = tls_calibrate(&meas, &nodes, net.anchors[0])?;
    let truth = net.hardware.calibration_coefficients();
    Ok(CalibrationOutcome {
        residual_error: residual_error(&coeffs, &truth),
        coefficients: coeffs,
        pilot_overhead: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn two_node_closed_form() {
        let mut rng = substream(0, "cal", 0);
        let hw = synthesize_hardware(2, 0.5, &mut rng);
        let m = measure_pairs(&hw, &[(0, 1)], |_, _| f64::INFINITY, &mut rng);
        let c = tls_calibrate(&m, &[0, 1], 0).unwrap();
        assert_eq!(c[0], Complex64::new(1.0, 0.0));
        let closed = m.get(1, 0).unwrap() / m.get(0, 1).unwrap();
        assert!((c[1] - closed).norm() < 1e-12);
        let truth = hw.calibration_coefficients();
        assert!((c[1] - truth[1] / truth[0]).norm() < 1e-12);
    }

    #[test]
    fn disconnected_measurements_fail() {
        let mut rng = substream(0, "cal", 1);
        let hw = synthesize_hardware(4, 0.5, &mut rng);
        let m = measure_pairs(&hw, &[(0, 1), (2, 3)], |_, _| 1e3, &mut rng);
        assert!(matches!(
            tls_calibrate(&m, &[0, 1, 2, 3], 0),
            Err(SimError::Calibration(_))
        ));
    }

    #[test]
    fn argos_requires_two_groups() {
        let m = Measurements::empty(3);
        assert!(matches!(
            argos_intra_cluster(&m, &[0, 1], &[], 0),
            Err(SimError::Grouping(_))
        ));
        assert!(matches!(
            argos_intra_cluster(&m, &[0], &[1], 2),
            Err(SimError::Grouping(_))
        ));
    }

    #[test]
    fn coloring_is_proper_with_two_colors_minimum() {
        let colors = color_conflicts(3, |_, _| false);
        assert_eq!(colors.iter().max(), Some(&1));
        let colors = color_conflicts(3, |_, _| true);
        assert!(colors[0] != colors[1] && colors[1] != colors[2] && colors[0] != colors[2]);
        assert_eq!(color_conflicts(1, |_, _| true), vec![0]);
        // Path graph 0-1-2: the ends can share.
        assert_eq!(color_conflicts(3, |c, d| c.abs_diff(d) == 1), vec![0, 1, 0]);
    }
}

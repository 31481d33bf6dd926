//! User-centric AP selection: distance, statistical CSI, received power and
//! an evolutionary game driven by replicator dynamics.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::rng::normal;
use crate::scenario::Layout;

/// Serving AP subset per UE, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub serving_sets: Vec<Vec<usize>>,
    /// Fixed cluster size of the baseline selectors, `None` for variable sizes.
    pub cluster_size: Option<usize>,
}

impl ClusterAssignment {
    /// Every UE served by all `l` APs.
    pub fn all_aps(l: usize, k: usize) -> Self {
        Self {
            serving_sets: vec![(0..l).collect(); k],
            cluster_size: Some(l),
        }
    }
}

/// Indices of the `q` largest scores, ties broken by the lower index.
fn top_q(scores: &[f64], q: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut s = idx[..q].to_vec();
    s.sort_unstable();
    s
}

fn check_q(q: usize, l: usize) -> Result<()> {
    if q == 0 || q > l {
        Err(SimError::InvalidClusterSize { q, l })
    } else {
        Ok(())
    }
}

/// Each UE picks its `q` nearest APs.
pub fn cluster_by_distance(layout: &Layout, q: usize) -> Result<ClusterAssignment> {
    let l = layout.num_aps();
    check_q(q, l)?;
    let serving_sets = (0..layout.num_ues())
        .map(|k| {
            let neg_dist: Vec<f64> = (0..l).map(|a| -layout.distance(a, k)).collect();
            top_q(&neg_dist, q)
        })
        .collect();
    Ok(ClusterAssignment {
        serving_sets,
        cluster_size: Some(q),
    })
}

/// Each UE picks the `q` APs with the largest gain estimate
/// `beta · 10^(σ z / 10)`, `z ~ N(0, 1)` i.i.d. per link.
pub fn cluster_by_statistical_csi<R: Rng + ?Sized>(
    beta: &DMatrix<f64>,
    error_sigma_db: f64,
    q: usize,
    rng: &mut R,
) -> Result<ClusterAssignment> {
    let (l, k) = beta.shape();
    check_q(q, l)?;
    let serving_sets = (0..k)
        .map(|kk| {
            let scores: Vec<f64> = (0..l)
                .map(|a| {
                    let z = normal(rng);
                    if error_sigma_db.is_infinite() {
                        z
                    } else {
                        10.0 * beta[(a, kk)].log10() + error_sigma_db * z
                    }
                })
                .collect();
            top_q(&scores, q)
        })
        .collect();
    Ok(ClusterAssignment {
        serving_sets,
        cluster_size: Some(q),
    })
}

/// Each UE picks the `q` APs receiving the most power `p_k beta[l, k]`.
pub fn cluster_by_received_power(
    beta: &DMatrix<f64>,
    ul_powers: &[f64],
    q: usize,
) -> Result<ClusterAssignment> {
    let (l, k) = beta.shape();
    check_q(q, l)?;
    let serving_sets = (0..k)
        .map(|kk| {
            let scores: Vec<f64> = (0..l).map(|a| ul_powers[kk] * beta[(a, kk)]).collect();
            top_q(&scores, q)
        })
        .collect();
    Ok(ClusterAssignment {
        serving_sets,
        cluster_size: Some(q),
    })
}

/// Population state of the clustering game.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    /// Candidate serving sets per UE.
    pub strategy_space: Vec<Vec<Vec<usize>>>,
    /// Population share of each strategy, per UE.
    pub proportions: Vec<Vec<f64>>,
    pub eta: f64,
    /// Last payoff seen for each strategy.
    pub payoff_cache: Vec<Vec<Option<f64>>>,
}

impl StrategyProfile {
    /// Uniform proportions over each UE's strategies.
    pub fn uniform(strategy_space: Vec<Vec<Vec<usize>>>, eta: f64) -> Self {
        let proportions = strategy_space
            .iter()
            .map(|s| vec![1.0 / s.len() as f64; s.len()])
            .collect();
        let payoff_cache = strategy_space.iter().map(|s| vec![None; s.len()]).collect();
        Self {
            strategy_space,
            proportions,
            eta,
            payoff_cache,
        }
    }

    /// Most popular strategy per UE, ties to the lower index.
    pub fn dominant(&self) -> Vec<usize> {
        self.proportions
            .iter()
            .map(|x| {
                x.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                        if v > bv {
                            (i, v)
                        } else {
                            (bi, bv)
                        }
                    })
                    .0
            })
            .collect()
    }
}

/// One discrete replicator update per UE:
/// `x_s ← x_s (1 + η(π_s - π̄)) / Σ`, negatives clamped to zero.
/// A UE whose payoffs are all zero is left unchanged.
pub fn replicator_step(profile: &StrategyProfile, payoffs: &[Vec<f64>]) -> StrategyProfile {
    let mut next = profile.clone();
    for (k, (x, pi)) in next.proportions.iter_mut().zip(payoffs).enumerate() {
        for (c, &p) in next.payoff_cache[k].iter_mut().zip(pi) {
            *c = Some(p);
        }
        if pi.iter().all(|&p| p == 0.0) {
            continue;
        }
        let mean: f64 = x.iter().zip(pi).map(|(a, b)| a * b).sum();
        for (xs, &p) in x.iter_mut().zip(pi) {
            *xs = (*xs * (1.0 + profile.eta * (p - mean))).max(0.0);
        }
        let total: f64 = x.iter().sum();
        if total > 0.0 {
            x.iter_mut().for_each(|v| *v /= total);
        }
    }
    next
}

/// Per-UE payoff (uplink SE) for a joint assignment.
pub trait PayoffEvaluator: Sync {
    fn payoff(&self, ue: usize, serving_sets: &[&[usize]]) -> f64;

    /// Whether a UE's payoff changes with the other UEs' serving sets.
    fn depends_on_others(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameParams {
    /// Candidate APs per UE for the fixed-size strategies.
    pub top_m: usize,
    pub eta: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Joint opponent profiles sampled per iteration.
    pub opponent_samples: usize,
}

impl Default for GameParams {
    fn default() -> Self {
        Self {
            top_m: 8,
            eta: 0.1,
            tolerance: 1e-4,
            max_iterations: 500,
            opponent_samples: 20,
        }
    }
}

/// Large-scale quantities of the hardened MR uplink SINR approximation.
#[derive(Debug, Clone)]
pub struct HardenedSinr<'a> {
    pub beta: &'a DMatrix<f64>,
    pub ap_antennas: usize,
    pub power: f64,
    pub noise: f64,
}

impl HardenedSinr<'_> {
    /// `p N A² / (p Σ_{j≠k} Σ_{l∈S} β_lk β_lj + σ² A)`, `A = Σ_{l∈S} β_lk`.
    pub fn sinr(&self, k: usize, set: &[usize]) -> f64 {
        let a: f64 = set.iter().map(|&l| self.beta[(l, k)]).sum();
        if a == 0.0 {
            return 0.0;
        }
        let interf: f64 = (0..self.beta.ncols())
            .filter(|&j| j != k)
            .map(|j| {
                set.iter()
                    .map(|&l| self.beta[(l, k)] * self.beta[(l, j)])
                    .sum::<f64>()
            })
            .sum();
        self.power * self.ap_antennas as f64 * a * a / (self.power * interf + self.noise * a)
    }

    /// Sets visited by greedily dropping the AP whose removal most improves
    /// the approximate SINR, starting from all APs, while it improves.
    pub fn drop_chain(&self, k: usize) -> Vec<Vec<usize>> {
        let mut cur: Vec<usize> = (0..self.beta.nrows()).collect();
        let mut val = self.sinr(k, &cur);
        let mut out = Vec::new();
        while cur.len() > 1 {
            let mut best: Option<(f64, usize)> = None;
            for i in 0..cur.len() {
                let mut trial = cur.clone();
                trial.remove(i);
                let v = self.sinr(k, &trial);
                if best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, i));
                }
            }
            match best {
                Some((v, i)) if v > val => {
                    cur.remove(i);
                    val = v;
                    out.push(cur.clone());
                }
                _ => break,
            }
        }
        out
    }
}

/// Candidate serving sets of UE `k`: every `min(q, top_m)`-subset of its
/// `top_m` strongest APs, its `q` strongest APs, all APs, and the greedy
/// drop chain. Duplicates are removed keeping the first occurrence.
pub fn strategy_space(
    approx: &HardenedSinr<'_>,
    k: usize,
    q: usize,
    top_m: usize,
) -> Vec<Vec<usize>> {
    let l = approx.beta.nrows();
    let col: Vec<f64> = (0..l).map(|a| approx.beta[(a, k)]).collect();
    let m = top_m.clamp(1, l);
    let cand = top_q(&col, m);
    let size = q.clamp(1, m);
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut push = |s: Vec<usize>, out: &mut Vec<Vec<usize>>| {
        if seen.insert(s.clone()) {
            out.push(s);
        }
    };
    for comb in combinations(&cand, size) {
        push(comb, &mut out);
    }
    push(top_q(&col, q.clamp(1, l)), &mut out);
    push((0..l).collect(), &mut out);
    for s in approx.drop_chain(k) {
        let mut s = s;
        s.sort_unstable();
        push(s, &mut out);
    }
    out
}

/// All `r`-element subsets of `items` in lexicographic order of positions.
fn combinations(items: &[usize], r: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    if r > n {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..r).collect();
    let mut out = Vec::new();
    loop {
        let mut s: Vec<usize> = idx.iter().map(|&i| items[i]).collect();
        s.sort_unstable();
        out.push(s);
        let Some(i) = (0..r).rev().find(|&i| idx[i] < i + n - r) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone)]
pub struct GameOutcome {
    pub assignment: ClusterAssignment,
    pub profile: StrategyProfile,
    pub iterations: usize,
    pub converged: bool,
}

/// Min-max affine map of one UE's payoffs onto `[0, 1]`; constant payoffs
/// map to zeros so the replicator leaves them alone.
fn normalize_payoffs(pi: &[f64]) -> Vec<f64> {
    let lo = pi.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; pi.len()];
    }
    pi.iter().map(|p| (p - lo) / (hi - lo)).collect()
}

/// Runs the clustering game from uniform proportions until the largest
/// proportion change falls below the tolerance or the iteration budget is
/// spent, then returns each UE's most popular strategy.
pub fn evolutionary_game_cluster<E: PayoffEvaluator + ?Sized, R: Rng + ?Sized>(
    strategy_spaces: Vec<Vec<Vec<usize>>>,
    evaluator: &E,
    params: &GameParams,
    rng: &mut R,
) -> Result<GameOutcome> {
    if strategy_spaces.iter().any(|s| s.is_empty()) {
        return Err(SimError::Config(
            "every UE needs at least one strategy".into(),
        ));
    }
    let k = strategy_spaces.len();
    let mut profile = StrategyProfile::uniform(strategy_spaces, params.eta);
    let finish = |profile: StrategyProfile, iterations, converged| {
        let serving_sets = profile
            .dominant()
            .iter()
            .enumerate()
            .map(|(u, &s)| profile.strategy_space[u][s].clone())
            .collect();
        GameOutcome {
            assignment: ClusterAssignment {
                serving_sets,
                cluster_size: None,
            },
            profile,
            iterations,
            converged,
        }
    };
    if profile.strategy_space.iter().all(|s| s.len() == 1) {
        return Ok(finish(profile, 0, true));
    }
    let fixed_payoffs: Option<Vec<Vec<f64>>> = (!evaluator.depends_on_others()).then(|| {
        let base: Vec<&[usize]> = profile
            .strategy_space
            .iter()
            .map(|s| s[0].as_slice())
            .collect();
        (0..k)
            .map(|u| {
                profile.strategy_space[u]
                    .par_iter()
                    .map(|s| {
                        let mut joint = base.clone();
                        joint[u] = s.as_slice();
                        evaluator.payoff(u, &joint)
                    })
                    .collect()
            })
            .collect()
    });
    for it in 1..=params.max_iterations {
        let raw = match &fixed_payoffs {
            Some(p) => p.clone(),
            None => sampled_payoffs(&profile, evaluator, params.opponent_samples.max(1), rng),
        };
        let norm: Vec<Vec<f64>> = raw.iter().map(|p| normalize_payoffs(p)).collect();
        let mut next = replicator_step(&profile, &norm);
        for (cache, p) in next.payoff_cache.iter_mut().zip(&raw) {
            for (c, &v) in cache.iter_mut().zip(p) {
                *c = Some(v);
            }
        }
        let change = next
            .proportions
            .iter()
            .zip(&profile.proportions)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        profile = next;
        if change < params.tolerance {
            return Ok(finish(profile, it, true));
        }
    }
    Ok(finish(profile, params.max_iterations, false))
}

/// Expected payoff of each strategy against opponents drawn from the
/// current mixed profile.
fn sampled_payoffs<E: PayoffEvaluator + ?Sized, R: Rng + ?Sized>(
    profile: &StrategyProfile,
    evaluator: &E,
    samples: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let k = profile.strategy_space.len();
    let draws: Vec<Vec<usize>> = (0..samples)
        .map(|_| {
            profile
                .proportions
                .iter()
                .map(|x| {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    for (i, &p) in x.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            return i;
                        }
                    }
                    x.len() - 1
                })
                .collect()
        })
        .collect();
    (0..k)
        .map(|u| {
            profile.strategy_space[u]
                .par_iter()
                .map(|s| {
                    draws
                        .iter()
                        .map(|d| {
                            let mut joint: Vec<&[usize]> = d
                                .iter()
                                .enumerate()
                                .map(|(v, &i)| profile.strategy_space[v][i].as_slice())
                                .collect();
                            joint[u] = s.as_slice();
                            evaluator.payoff(u, &joint)
                        })
                        .sum::<f64>()
                        / samples as f64
                })
                .collect()
        })
        .collect()
}

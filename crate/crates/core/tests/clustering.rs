use cfsim::clustering::{
    cluster_by_distance, cluster_by_received_power, cluster_by_statistical_csi,
    evolutionary_game_cluster, replicator_step, strategy_space, GameParams, HardenedSinr,
    PayoffEvaluator, StrategyProfile,
};
use cfsim::rng::substream;
use cfsim::scenario::Layout;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

/// Payoffs from a per-UE table indexed by the UE's own strategy.
struct TablePayoff {
    spaces: Vec<Vec<Vec<usize>>>,
    table: Vec<Vec<f64>>,
}

impl PayoffEvaluator for TablePayoff {
    fn payoff(&self, ue: usize, sets: &[&[usize]]) -> f64 {
        let s = self.spaces[ue]
            .iter()
            .position(|x| x.as_slice() == sets[ue])
            .unwrap();
        self.table[ue][s]
    }

    fn depends_on_others(&self) -> bool {
        false
    }
}

/// Two-UE game whose payoff depends on both UEs' strategy indices.
struct PairGame {
    spaces: Vec<Vec<Vec<usize>>>,
    // payoff[ue][own][other]
    payoff: Vec<Vec<Vec<f64>>>,
}

impl PayoffEvaluator for PairGame {
    fn payoff(&self, ue: usize, sets: &[&[usize]]) -> f64 {
        let idx = |u: usize| {
            self.spaces[u]
                .iter()
                .position(|x| x.as_slice() == sets[u])
                .unwrap()
        };
        self.payoff[ue][idx(ue)][idx(1 - ue)]
    }
}

fn nonempty_subsets(l: usize) -> Vec<Vec<usize>> {
    (1u32..1 << l)
        .map(|m| (0..l).filter(|&i| m >> i & 1 == 1).collect())
        .collect()
}

#[test]
fn single_ue_game_finds_the_exhaustive_optimum() {
    let mut rng = substream(1, "k1", 0);
    for trial in 0..20 {
        let space = nonempty_subsets(3);
        assert_eq!(space.len(), 7);
        let table: Vec<f64> = (0..7).map(|_| rng.random_range(0.0..5.0)).collect();
        let best = (0..7)
            .max_by(|&a, &b| table[a].total_cmp(&table[b]))
            .unwrap();
        let eval = TablePayoff {
            spaces: vec![space.clone()],
            table: vec![table],
        };
        let params = GameParams {
            max_iterations: 20_000,
            tolerance: 1e-9,
            eta: 0.5,
            ..Default::default()
        };
        let out = evolutionary_game_cluster(vec![space.clone()], &eval, &params, &mut rng).unwrap();
        assert_eq!(out.assignment.serving_sets[0], space[best], "trial {trial}");
    }
}

#[test]
fn two_ue_game_reaches_the_dominance_solution() {
    let mut rng = substream(2, "pair", 0);
    for _ in 0..10 {
        let spaces: Vec<Vec<Vec<usize>>> = vec![
            nonempty_subsets(2)
                .into_iter()
                .chain([vec![0, 1, 2]])
                .collect();
            2
        ];
        // Each UE has a strictly dominant strategy `d[u]` whatever the other plays.
        let d = [rng.random_range(0..4), rng.random_range(0..4)];
        let payoff: Vec<Vec<Vec<f64>>> = (0..2)
            .map(|u| {
                (0..4)
                    .map(|s| {
                        (0..4)
                            .map(|_| {
                                if s == d[u] {
                                    rng.random_range(3.0..4.0)
                                } else {
                                    rng.random_range(0.0..2.9)
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        // Brute-force pure Nash equilibria.
        let nash: Vec<(usize, usize)> = (0..4)
            .flat_map(|a| (0..4).map(move |b| (a, b)))
            .filter(|&(a, b)| {
                (0..4).all(|x| payoff[0][x][b] <= payoff[0][a][b])
                    && (0..4).all(|y| payoff[1][y][a] <= payoff[1][b][a])
            })
            .collect();
        assert_eq!(nash, vec![(d[0], d[1])]);
        let game = PairGame {
            spaces: spaces.clone(),
            payoff,
        };
        let params = GameParams {
            max_iterations: 3000,
            opponent_samples: 30,
            eta: 0.3,
            ..Default::default()
        };
        let out = evolutionary_game_cluster(spaces.clone(), &game, &params, &mut rng).unwrap();
        assert_eq!(out.profile.dominant(), vec![d[0], d[1]]);
    }
}

#[test]
fn mean_payoff_never_decreases_under_fixed_payoffs() {
    let mut rng = substream(3, "mean", 0);
    for _ in 0..50 {
        let n = rng.random_range(2..8);
        let pi: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut profile =
            StrategyProfile::uniform(vec![vec![vec![0]; n]], rng.random_range(0.05..1.0));
        let mut last = f64::NEG_INFINITY;
        for _ in 0..200 {
            let mean: f64 = profile.proportions[0]
                .iter()
                .zip(&pi)
                .map(|(x, p)| x * p)
                .sum();
            assert!(mean >= last - 1e-12);
            last = mean;
            profile = replicator_step(&profile, std::slice::from_ref(&pi));
        }
    }
}

#[test]
fn received_power_with_equal_powers_equals_error_free_statistical_csi() {
    let mut rng = substream(4, "rp", 0);
    for _ in 0..20 {
        let beta = DMatrix::from_fn(12, 5, |_, _| 10f64.powf(rng.random_range(-12.0..-6.0)));
        let rp = cluster_by_received_power(&beta, &[0.1; 5], 4).unwrap();
        let st = cluster_by_statistical_csi(&beta, 0.0, 4, &mut rng).unwrap();
        assert_eq!(rp, st);
    }
}

#[test]
fn infinite_error_selects_uniformly() {
    let beta = DMatrix::from_fn(8, 1, |l, _| 10f64.powi(-(l as i32)));
    let mut rng = substream(5, "chi2", 0);
    let draws = 16_000;
    let mut counts = [0usize; 8];
    for _ in 0..draws {
        let a = cluster_by_statistical_csi(&beta, f64::INFINITY, 1, &mut rng).unwrap();
        counts[a.serving_sets[0][0]] += 1;
    }
    let e = draws as f64 / 8.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 0.999 quantile of chi-squared with 7 degrees of freedom.
    assert!(chi2 < 24.32, "chi2 {chi2}, counts {counts:?}");
}

#[test]
fn invalid_cluster_size_is_rejected() {
    let beta = DMatrix::from_element(4, 2, 1.0);
    assert!(cluster_by_received_power(&beta, &[1.0; 2], 0).is_err());
    assert!(cluster_by_received_power(&beta, &[1.0; 2], 5).is_err());
}

#[test]
fn strategy_space_contains_top_q_and_all_aps() {
    let mut rng = substream(6, "space", 0);
    let beta = DMatrix::from_fn(10, 3, |_, _| 10f64.powf(rng.random_range(-3.0..0.0)));
    let approx = HardenedSinr {
        beta: &beta,
        ap_antennas: 2,
        power: 1.0,
        noise: 1e-3,
    };
    for k in 0..3 {
        let s = strategy_space(&approx, k, 3, 5);
        let all: Vec<usize> = (0..10).collect();
        assert!(s.contains(&all));
        assert!(s.len() > 10);
        let mut uniq = s.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), s.len());
        assert!(s.iter().all(|set| set.windows(2).all(|w| w[0] < w[1])));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn replicator_keeps_proportions_on_the_simplex(
        raw in prop::collection::vec(0.001f64..1.0, 2..8),
        pay in prop::collection::vec(0.0f64..1.0, 8),
        eta in 0.0f64..1.0,
        steps in 1usize..50,
    ) {
        let n = raw.len();
        let total: f64 = raw.iter().sum();
        let mut profile = StrategyProfile::uniform(vec![vec![vec![0]; n]], eta);
        profile.proportions[0] = raw.iter().map(|x| x / total).collect();
        let pi = pay[..n].to_vec();
        for _ in 0..steps {
            let before = profile.proportions[0].clone();
            let mean: f64 = before.iter().zip(&pi).map(|(x, p)| x * p).sum();
            profile = replicator_step(&profile, std::slice::from_ref(&pi));
            let x = &profile.proportions[0];
            prop_assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(x.iter().all(|&v| v >= 0.0));
            // Below-average strategies lose share, above-average gain.
            for i in 0..n {
                if eta > 0.0 && pi[i] < mean - 1e-12 {
                    prop_assert!(x[i] <= before[i]);
                }
                if eta > 0.0 && pi[i] > mean + 1e-12 {
                    prop_assert!(x[i] >= before[i]);
                }
            }
        }
    }

    #[test]
    fn selectors_are_permutation_equivariant(seed in 0u64..10_000, q in 1usize..6) {
        let mut rng = substream(seed, "perm", 0);
        let (l, k) = (6, 4);
        let beta = DMatrix::from_fn(l, k, |_, _| 10f64.powf(rng.random_range(-9.0..-3.0)));
        let perm = [2usize, 0, 3, 1];
        let pbeta = DMatrix::from_fn(l, k, |a, j| beta[(a, perm[j])]);
        let a = cluster_by_received_power(&beta, &[1.0; 4], q).unwrap();
        let b = cluster_by_received_power(&pbeta, &[1.0; 4], q).unwrap();
        for j in 0..k {
            prop_assert_eq!(&b.serving_sets[j], &a.serving_sets[perm[j]]);
        }
        let aps: Vec<[f64; 2]> = (0..l).map(|_| [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)]).collect();
        let ues: Vec<[f64; 2]> = (0..k).map(|_| [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)]).collect();
        let pues: Vec<[f64; 2]> = perm.iter().map(|&p| ues[p]).collect();
        let da = cluster_by_distance(&Layout::from_positions(aps.clone(), ues), q).unwrap();
        let db = cluster_by_distance(&Layout::from_positions(aps, pues), q).unwrap();
        for j in 0..k {
            prop_assert_eq!(&db.serving_sets[j], &da.serving_sets[perm[j]]);
        }
    }
}

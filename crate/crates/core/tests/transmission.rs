mod common;

use cfsim::rng::{complex_normal, substream};
use cfsim::transmission::{
    downlink_se, draw_channels, mrt_precode, prefactor, rate_splitting_se, uplink_se_ue,
    DownlinkRealization, PowerNormalization, PowerSplit, UplinkCombining,
};
use cfsim::Complex64;
use common::{fused_sinr_oracle, mr_sinr_oracle};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn random_beta<R: Rng>(l: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(l, k, |_, _| 10f64.powf(rng.random_range(-2.0..1.0)))
}

#[test]
fn uplink_sinr_matches_direct_inverse_oracles() {
    let mut rng = substream(1, "ul-oracle", 0);
    for _ in 0..200 {
        let (l, k, n) = (
            rng.random_range(1..=6),
            rng.random_range(1..=4),
            rng.random_range(1..=3),
        );
        let beta = random_beta(l, k, &mut rng);
        let g = draw_channels(&beta, n, &mut rng);
        let serving: Vec<usize> = (0..l).filter(|_| rng.random_bool(0.7)).collect();
        if serving.is_empty() {
            continue;
        }
        let ue = rng.random_range(0..k);
        let (p, noise) = (rng.random_range(0.1..2.0), rng.random_range(0.01..1.0));
        let real = std::slice::from_ref(&g);
        for (comb, oracle) in [
            (
                UplinkCombining::OptimalFusion,
                fused_sinr_oracle(&g, ue, &serving, n, p, noise),
            ),
            (
                UplinkCombining::Mr,
                mr_sinr_oracle(&g, ue, &serving, n, p, noise),
            ),
        ] {
            let se = uplink_se_ue(real, ue, &serving, n, p, noise, comb);
            let expect = (1.0 + oracle).log2();
            assert!(
                (se - expect).abs() <= 1e-8 * expect.max(1.0),
                "{comb:?}: {se} vs {expect}"
            );
        }
    }
}

#[test]
fn fused_uplink_is_monotone_in_the_serving_set() {
    let mut rng = substream(2, "ul-mono", 0);
    for _ in 0..100 {
        let (l, k) = (rng.random_range(2..=6), rng.random_range(1..=3));
        let beta = random_beta(l, k, &mut rng);
        let reals: Vec<_> = (0..4).map(|_| draw_channels(&beta, 2, &mut rng)).collect();
        let ue = rng.random_range(0..k);
        let sub: Vec<usize> = (0..l).filter(|_| rng.random_bool(0.5)).collect();
        let extra = rng.random_range(0..l);
        let mut sup = sub.clone();
        if !sup.contains(&extra) {
            sup.push(extra);
            sup.sort();
        }
        let a = uplink_se_ue(
            &reals,
            ue,
            &sub,
            2,
            1.0,
            0.1,
            UplinkCombining::OptimalFusion,
        );
        let b = uplink_se_ue(
            &reals,
            ue,
            &sup,
            2,
            1.0,
            0.1,
            UplinkCombining::OptimalFusion,
        );
        assert!(b >= a - 1e-9, "{a} > {b}");
    }
}

#[test]
fn single_link_uplink_matches_scalar_ergodic_rate() {
    // One UE, one single-antenna AP: E[log2(1 + p |g|² / σ²)] with |g|² ~ Exp(β).
    let beta = DMatrix::from_element(1, 1, 2.0);
    let mut rng = substream(3, "ul-scalar", 0);
    let reals: Vec<_> = (0..200_000)
        .map(|_| draw_channels(&beta, 1, &mut rng))
        .collect();
    let se = uplink_se_ue(&reals, 0, &[0], 1, 1.0, 1.0, UplinkCombining::OptimalFusion);
    // Numerical integral of log2(1 + 2x) e^{-x}.
    let steps = 400_000;
    let h = 40.0 / steps as f64;
    let exact: f64 = (0..steps)
        .map(|i| (i as f64 + 0.5) * h)
        .map(|x| (1.0 + 2.0 * x).log2() * (-x).exp() * h)
        .sum();
    assert!((se / exact - 1.0).abs() < 0.01, "{se} vs {exact}");
}

#[test]
fn zero_channel_ap_and_empty_set() {
    let mut rng = substream(4, "ul-zero", 0);
    let beta = random_beta(3, 2, &mut rng);
    let mut g = draw_channels(&beta, 2, &mut rng);
    for m in 4..6 {
        for k in 0..2 {
            g[(m, k)] = Complex64::new(0.0, 0.0);
        }
    }
    let reals = [g];
    for comb in [UplinkCombining::OptimalFusion, UplinkCombining::Mr] {
        let a = uplink_se_ue(&reals, 0, &[0, 1], 2, 1.0, 0.1, comb);
        let b = uplink_se_ue(&reals, 0, &[0, 1, 2], 2, 1.0, 0.1, comb);
        assert!((a - b).abs() < 1e-12);
        assert_eq!(uplink_se_ue(&reals, 0, &[], 2, 1.0, 0.1, comb), 0.0);
    }
}

fn downlink_instance(seed: u64, k: usize) -> DownlinkRealization {
    let mut rng = substream(seed, "dl", 0);
    let beta = random_beta(4, k, &mut rng);
    let g = draw_channels(&beta, 2, &mut rng);
    let w = mrt_precode(&g, 2, 1.0, PowerNormalization::PerAp);
    let common = DVector::from_fn(8, |m, _| g[(m, 0)].conj() / g.column(0).norm() * 0.5);
    DownlinkRealization::new(g, w, common, 0.1)
}

fn drift(seed: u64, k: usize, sd: f64, n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = substream(seed, "drift", 0);
    (0..n)
        .map(|_| {
            let ap = (0..8)
                .map(|_| complex_normal(&mut rng, 2.0).re * sd)
                .collect();
            let ue = (0..k)
                .map(|_| complex_normal(&mut rng, 2.0).re * sd)
                .collect();
            (ap, ue)
        })
        .collect()
}

#[test]
fn rate_splitting_at_zero_split_is_identical_to_private_only() {
    for seed in 0..20 {
        let real = downlink_instance(seed, 3);
        let phases = drift(seed, 3, 0.3, 10);
        let a = downlink_se(&real, &phases, 0.9);
        let b = rate_splitting_se(
            &real,
            &phases,
            &[PowerSplit {
                common_fraction: 0.0,
            }],
            0.9,
        )
        .remove(0);
        assert_eq!(a, b);
        assert_eq!(a.common_se, 0.0);
    }
}

#[test]
fn single_ue_without_drift_matches_closed_form() {
    let real = downlink_instance(7, 1);
    let gain = real
        .channels
        .column(0)
        .dot(&real.precoders.column(0))
        .norm_sqr();
    let se = downlink_se(&real, &[(vec![0.0; 8], vec![0.0])], 1.0);
    assert!((se.sum_se - (1.0 + gain / 0.1).log2()).abs() < 1e-12);
    // A lone UE decodes the common stream too; with no interference it adds rate.
    let rs = rate_splitting_se(
        &real,
        &[(vec![0.0; 8], vec![0.0])],
        &[PowerSplit {
            common_fraction: 0.3,
        }],
        1.0,
    );
    assert!(rs[0].common_se > 0.0 && rs[0].sum_se.is_finite());
}

#[test]
fn prefactor_is_clamped() {
    assert_eq!(prefactor(10, 200, 0.0), 0.95);
    assert_eq!(prefactor(10, 200, 2.0), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn downlink_se_is_finite_and_nonnegative(seed in 0u64..10_000, k in 1usize..4, sd in 0.0f64..2.0, t in 0.0f64..1.0) {
        let real = downlink_instance(seed, k);
        let phases = drift(seed, k, sd, 4);
        let r = rate_splitting_se(&real, &phases, &[PowerSplit { common_fraction: t }], 0.8).remove(0);
        prop_assert!(r.sum_se.is_finite() && r.sum_se >= 0.0);
        prop_assert!(r.per_ue_se.iter().all(|s| *s >= 0.0));
        prop_assert!((r.per_ue_se.iter().sum::<f64>() - r.sum_se).abs() < 1e-9 * r.sum_se.max(1.0));
    }

    #[test]
    fn uplink_se_ignores_a_common_channel_rotation(seed in 0u64..10_000, phi in 0.0f64..6.3) {
        let mut rng = substream(seed, "rot", 0);
        let beta = random_beta(3, 2, &mut rng);
        let g = draw_channels(&beta, 2, &mut rng);
        let rot = g.map(|x| x * Complex64::from_polar(1.0, phi));
        for comb in [UplinkCombining::OptimalFusion, UplinkCombining::Mr] {
            let a = uplink_se_ue(std::slice::from_ref(&g), 0, &[0, 2], 2, 1.0, 0.1, comb);
            let b = uplink_se_ue(std::slice::from_ref(&rot), 0, &[0, 2], 2, 1.0, 0.1, comb);
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}

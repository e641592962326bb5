use std::f64::consts::PI;

use beamrefine_core::array::{codeword_at, decode, encode_nearest, ArrayConfig};
use beamrefine_core::beamsel::received_power;
use beamrefine_core::channel::{
    random_gaussian_channel, sample_orientations_seeded, synth_channel, AngleRange,
    ChannelScenario, PathComponent,
};
use beamrefine_core::eval::{empirical_cdf, mean_and_population_variance, validate, GapMode};
use beamrefine_core::hier::{build_hier, hier_search};
use beamrefine_core::refine::{coverage_check, refine, TrainingSet};
use beamrefine_core::rng::{stream_rng, Stream};
use beamrefine_core::{ChannelRealization, Complex64};
use proptest::prelude::*;
use rand::Rng;

fn small_cfg() -> impl Strategy<Value = ArrayConfig> {
    (1usize..=4, 1u32..=6)
        .prop_flat_map(|(side, bits)| (Just(side), Just(bits), 0..bits))
        .prop_map(|(side, bits, k)| ArrayConfig::new(side, bits, k, 0.5, 25.1e9).unwrap())
}

fn channel(cfg: &ArrayConfig, seed: u64) -> ChannelRealization {
    random_gaussian_channel(cfg.element_count(), &mut stream_rng(seed, Stream::Oracle))
}

fn rank_in(cfg: &ArrayConfig, r: u64) -> u128 {
    cfg.codebook_cardinality().map_or(u128::from(r), |c| u128::from(r) % c)
}

fn rel_close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

proptest! {
    #[test]
    fn decode_then_encode_is_identity(cfg in small_cfg(), r in any::<u64>()) {
        let sv = codeword_at(&cfg, rank_in(&cfg, r)).unwrap();
        let w = decode::<f64>(&sv, &cfg).unwrap();
        prop_assert_eq!(encode_nearest(w.as_slice(), &cfg), sv);
    }

    #[test]
    fn power_ignores_common_channel_phase(cfg in small_cfg(), r in any::<u64>(), seed in any::<u64>(), phi in -PI..PI) {
        let sv = codeword_at(&cfg, rank_in(&cfg, r)).unwrap();
        let h = channel(&cfg, seed);
        let p0 = received_power(&h, &sv, &cfg).unwrap().0;
        let p1 = received_power(&h.scaled(Complex64::from_polar(1.0, phi)), &sv, &cfg).unwrap().0;
        prop_assert!((p0 - p1).abs() < 1e-9 || (p0.is_infinite() && p1.is_infinite()));
    }

    #[test]
    fn power_never_exceeds_coherent_sum(cfg in small_cfg(), r in any::<u64>(), seed in any::<u64>()) {
        let sv = codeword_at(&cfg, rank_in(&cfg, r)).unwrap();
        let h = channel(&cfg, seed);
        let bound = 20.0 * h.h.iter().map(|c| c.norm()).sum::<f64>().log10();
        prop_assert!(received_power(&h, &sv, &cfg).unwrap().0 <= bound + 1e-9);
    }

    #[test]
    fn scaling_channel_shifts_power(cfg in small_cfg(), r in any::<u64>(), seed in any::<u64>(), c in 0.01f64..100.0) {
        let sv = codeword_at(&cfg, rank_in(&cfg, r)).unwrap();
        let h = channel(&cfg, seed);
        let p0 = received_power(&h, &sv, &cfg).unwrap().0;
        prop_assume!(p0.is_finite());
        let p1 = received_power(&h.scaled(Complex64::new(c, 0.0)), &sv, &cfg).unwrap().0;
        prop_assert!((p1 - p0 - 20.0 * c.log10()).abs() < 1e-9);
    }

    #[test]
    fn rotating_scene_and_receiver_together_changes_nothing(
        seed in any::<u64>(), theta in -PI..PI, delta in -PI..PI, reflections in 0usize..6,
    ) {
        let cfg = ArrayConfig::new(4, 10, 0, 0.5, 25.1e9).unwrap();
        let s = ChannelScenario::line_of_sight_with_reflections(reflections, &mut stream_rng(seed, Stream::Scenario));
        let a = synth_channel::<f64>(&s, theta, &cfg);
        let b = synth_channel::<f64>(&s.rotated(delta), theta + delta, &cfg);
        for (x, y) in a.h.iter().zip(&b.h) {
            prop_assert!(rel_close(*x, *y, 1e-12));
        }
    }

    #[test]
    fn synthesis_is_linear_in_paths(seed in any::<u64>(), theta in -PI..PI) {
        let cfg = ArrayConfig::new(4, 10, 0, 0.5, 25.1e9).unwrap();
        let mut rng = stream_rng(seed, Stream::Scenario);
        let mut path = || PathComponent::new(
            rng.random_range(-PI..PI),
            rng.random_range(-0.5..0.5),
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        );
        let (p, q) = (path(), path());
        let both = ChannelScenario::new(vec![p, q]).unwrap();
        let hp = synth_channel::<f64>(&ChannelScenario::new(vec![p]).unwrap(), theta, &cfg);
        let hq = synth_channel::<f64>(&ChannelScenario::new(vec![q]).unwrap(), theta, &cfg);
        let hb = synth_channel::<f64>(&both, theta, &cfg);
        for ((x, y), z) in hp.h.iter().zip(&hq.h).zip(&hb.h) {
            prop_assert!(rel_close(x + y, *z, 1e-12));
        }
    }

    #[test]
    fn welford_matches_two_pass(xs in prop::collection::vec(-50.0f64..50.0, 1..200)) {
        let (m, v) = mean_and_population_variance(&xs);
        let n = xs.len() as f64;
        let m2 = xs.iter().sum::<f64>() / n;
        let v2 = xs.iter().map(|x| (x - m2).powi(2)).sum::<f64>() / n;
        prop_assert!((m - m2).abs() < 1e-9);
        prop_assert!((v - v2).abs() < 1e-9 * v2.max(1.0));
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one(xs in prop::collection::vec(0.0f64..10.0, 1..200)) {
        let cdf = empirical_cdf(&xs);
        prop_assert!(cdf.windows(2).all(|w| w[0].gap_db < w[1].gap_db && w[0].fraction < w[1].fraction));
        prop_assert_eq!(cdf.last().unwrap().fraction, 1.0);
        for k in &cdf {
            let below = xs.iter().filter(|&&x| x <= k.gap_db).count() as f64 / xs.len() as f64;
            prop_assert!((k.fraction - below).abs() < 1e-12);
        }
    }
}

fn training(seed: u64, m: usize) -> (ArrayConfig, TrainingSet<f64>, ChannelScenario) {
    let cfg = ArrayConfig::new(4, 10, 0, 0.5, 25.1e9).unwrap();
    let range = AngleRange::from_degrees(-45.0, 45.0).unwrap();
    let s = ChannelScenario::default_multipath(&mut stream_rng(seed, Stream::Scenario));
    let channels = sample_orientations_seeded(m, range, seed)
        .into_iter()
        .map(|t| synth_channel(&s, t, &cfg))
        .collect();
    (cfg, TrainingSet::from_channels(channels, &cfg).unwrap(), s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_is_deterministic_and_feasible(seed in any::<u64>(), gamma in 0.5f64..6.0) {
        let (cfg, train, _) = training(seed, 80);
        let a = refine(&train, gamma, &cfg, seed).unwrap();
        let b = refine(&train, gamma, &cfg, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(coverage_check(&a.zeta, &train, gamma, &cfg).unwrap().is_empty());
        prop_assert!(a.iterations <= train.len());
        prop_assert!(a.zeta.len() <= a.iterations);
    }

    #[test]
    fn cdf_at_gamma_is_satisfied_fraction(seed in any::<u64>(), gamma in 0.5f64..6.0) {
        let (cfg, train, s) = training(seed, 60);
        let r = refine(&train, gamma, &cfg, seed).unwrap();
        let range = AngleRange::from_degrees(-45.0, 45.0).unwrap();
        let holdout: Vec<ChannelRealization> = sample_orientations_seeded(50, range, seed ^ 1)
            .into_iter()
            .map(|t| synth_channel(&s, t, &cfg))
            .collect();
        let rep = validate(&r.zeta, &holdout, &cfg, gamma, GapMode::Clamped).unwrap();
        prop_assert!((rep.cdf_at(gamma) - rep.satisfied_fraction).abs() < 1e-12);
    }
}

#[test]
fn hierarchy_mostly_lands_on_nearest_leaf_for_line_of_sight() {
    let cfg = ArrayConfig::new(4, 10, 0, 0.5, 25.1e9).unwrap();
    let sector = AngleRange::from_degrees(-45.0, 45.0).unwrap();
    let hc = build_hier(&cfg, sector, 5).unwrap();
    let los = ChannelScenario::line_of_sight();
    let mut rng = stream_rng(11, Stream::HoldoutOrientations);
    let draws = 500;
    let mut hits = 0;
    for _ in 0..draws {
        let arrival: f64 = rng.random_range(sector.lo..sector.hi);
        let h = synth_channel::<f64>(&los.rotated(arrival), 0.0, &cfg);
        let leaf = hier_search(&hc, &h, &cfg).unwrap().leaf;
        let nearest = (0..32)
            .min_by(|&a, &b| {
                (hc.centre(5, a) - arrival)
                    .abs()
                    .total_cmp(&(hc.centre(5, b) - arrival).abs())
            })
            .unwrap();
        hits += usize::from(leaf == nearest);
    }
    let frac = hits as f64 / draws as f64;
    assert!(frac >= 0.9, "nearest-leaf fraction {frac}");
}

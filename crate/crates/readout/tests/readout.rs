use std::f64::consts::PI;

use proptest::prelude::*;
use subq_measurement::PointerApparatus;
use subquantum_core::basis::EigenBasis;
use subquantum_core::field::GuidanceField;
use subquantum_core::rng;
use subquantum_core::Error;
use subquantum_readout::*;

fn well() -> EigenBasis {
    EigenBasis::well(PI).unwrap()
}

fn clean_run(set: &[u32], times: usize, seed: u64) -> SingleRun {
    let truth = ModeSet::new(set.to_vec(), 12).unwrap();
    let t = sample_times(&well(), times, &mut rng::stream(seed, 0));
    synthesize_run(&truth, well(), &t, 0.0, 0.002, seed).unwrap()
}

// --- mode sets

#[test]
fn binomial_counts() {
    assert_eq!(binomial(12, 4), 495);
    assert_eq!(binomial(40, 6), 3_838_380);
    assert_eq!(binomial(3, 5), 0);
    assert_eq!(binomial(64, 32), 1_832_624_140_942_590_534);
}

#[test]
fn clean_samples_recover_the_set_exactly() {
    let run = clean_run(&[2, 3, 5, 7], 4, 1);
    let fit = solve_mode_set(&run.samples, well(), 4, 12, 0.0, 0).unwrap();
    assert_eq!(fit.best.set, vec![2, 3, 5, 7]);
    assert!(fit.residual < 1e-10, "{}", fit.residual);
    assert!(fit.exhaustive && fit.candidates == 495 && !fit.ambiguous);
}

#[test]
fn noisy_single_trajectories_recover_the_set() {
    let summary = run_recovery(&RecoveryConfig::default(), 2024).unwrap();
    assert_eq!(summary.trials.len(), 100);
    assert!(summary.rate >= 0.99, "{}\n{}", summary.rate, summary.to_text());
}

#[test]
fn true_set_residual_sits_at_the_noise_floor() {
    let truth = ModeSet::new(vec![1, 4, 6, 11], 12).unwrap();
    let t = sample_times(&well(), 8, &mut rng::stream(5, 0));
    let run = synthesize_run(&truth, well(), &t, 1e-6, 0.002, 5).unwrap();
    let fit = solve_mode_set(&run.samples, well(), 4, 12, 1e-6, 0).unwrap();
    let r = residual(&run.samples, well(), &truth);
    assert!(r < 5.0 * fit.noise_floor, "{r} vs {}", fit.noise_floor);
    assert_eq!(fit.best, truth);
}

#[test]
fn distinct_sets_are_separated_on_clean_data() {
    let floor_noise: f64 = 1e-6;
    let mut separated = 0;
    let trials = 200;
    for i in 0..trials {
        let mut r = rng::stream(77, i);
        let n = 1 + (i as usize % 4).max(1);
        let a = ModeSet::random(n, 12, &mut r).unwrap();
        let b = loop {
            let b = ModeSet::random(n, 12, &mut r).unwrap();
            if b != a {
                break b;
            }
        };
        let t = sample_times(&well(), 8, &mut r);
        let run = synthesize_run(&a, well(), &t, 0.0, 0.002, i).unwrap();
        let floor = run.samples.len() as f64 * floor_noise * floor_noise;
        if residual(&run.samples, well(), &b) - residual(&run.samples, well(), &a) > 1e3 * floor {
            separated += 1;
        }
    }
    assert!(separated as f64 >= 0.99 * trials as f64, "{separated}/{trials}");
}

#[test]
fn single_mode_is_flagged_degenerate() {
    let run = clean_run(&[3], 6, 2);
    assert!(run.samples.iter().all(|s| s.v.abs() < 1e-12));
    let fit = solve_mode_set(&run.samples, well(), 1, 12, 0.0, 0).unwrap();
    assert!(fit.degenerate);
    // all singletons explain zero velocity equally
    assert!(fit.runner_up.as_ref().unwrap().1 < 1e-20);
}

#[test]
fn large_searches_fall_back_to_local_moves() {
    let truth = ModeSet::new(vec![2, 9, 17, 23, 31, 38], 40).unwrap();
    let t = sample_times(&well(), 12, &mut rng::stream(3, 0));
    let run = synthesize_run(&truth, well(), &t, 0.0, 0.0005, 3).unwrap();
    let fit = solve_mode_set(&run.samples, well(), 6, 40, 0.0, 9).unwrap();
    assert!(!fit.exhaustive);
    assert!(fit.candidates > 1_000_000);
    assert!(fit.residual <= residual(&run.samples, well(), &truth) + 1e-9 || fit.best == truth);
}

#[test]
fn bad_mode_requests_are_refused() {
    let run = clean_run(&[1, 2], 4, 0);
    assert!(matches!(solve_mode_set(&run.samples, well(), 0, 12, 0.0, 0), Err(Error::InvalidParameter { .. })));
    assert!(matches!(solve_mode_set(&run.samples[..2], well(), 3, 12, 0.0, 0), Err(Error::SampleTooSmall { .. })));
    assert!(ModeSet::new(vec![2, 2], 12).is_err());
    assert!(ModeSet::new(vec![13], 12).is_err());
}

// --- gadget

fn closed_form(n: usize, s: u64) -> [f64; 2] {
    let size = (1u64 << n) as f64;
    let w = [(size - s as f64) / size, s as f64 / size];
    let norm = w[0].hypot(w[1]);
    [w[0] / norm, w[1] / norm]
}

#[test]
fn constant_zero_oracle_keeps_the_zero_branch() {
    let g = run_gadget(&Oracle::parse(3, "zero", 0).unwrap()).unwrap();
    assert_eq!(g.alpha, [1.0, 0.0]);
    assert!((g.probability - 1.0).abs() < 1e-14);
    assert_eq!(g.implied_s, 0);
}

#[test]
fn single_marked_input_example() {
    let f = Oracle::parse(2, "08", 0).unwrap();
    assert_eq!(f.table, vec![false, false, false, true]);
    let g = run_gadget(&f).unwrap();
    assert!((g.weights[0] - 0.75).abs() < 1e-15 && (g.weights[1] - 0.25).abs() < 1e-15);
    assert!((g.probability - 0.625).abs() < 1e-15);
    assert_eq!(g.implied_s, 1);
    assert_eq!(Oracle::parse(2, "single:3", 0).unwrap(), f);
}

#[test]
fn every_small_oracle_matches_the_closed_form() {
    for n in 1..=4usize {
        let size = 1usize << n;
        for code in 0u64..1 << size {
            let f = Oracle::from_fn(n, |x| code >> x & 1 == 1).unwrap();
            let s = f.count();
            let g = run_gadget(&f).unwrap();
            let want = closed_form(n, s);
            assert!((g.alpha[0] - want[0]).abs() < 1e-12 && (g.alpha[1] - want[1]).abs() < 1e-12, "n={n} code={code:x}");
            assert!(g.probability >= 0.25);
            assert_eq!(g.implied_s, s);
            assert!(g.norm_error < 1e-12);
        }
    }
}

#[test]
fn named_families_and_errors() {
    assert_eq!(Oracle::parse(3, "count:5", 0).unwrap().count(), 5);
    assert_eq!(Oracle::parse(3, "all", 0).unwrap().count(), 8);
    assert_eq!(Oracle::parse(4, "random", 1).unwrap(), Oracle::parse(4, "random", 1).unwrap());
    assert_eq!(Oracle::parse(4, "0xFFFF", 0).unwrap().count(), 16);
    assert!(matches!(Oracle::parse(2, "1F", 0), Err(Error::Parse(_))));
    assert!(matches!(Oracle::parse(2, "zz", 0), Err(Error::Parse(_))));
    assert!(matches!(Oracle::parse(2, "single:4", 0), Err(Error::InvalidParameter { .. })));
    assert!(matches!(Oracle::parse(13, "zero", 0), Err(Error::RegisterTooLarge { qubits: 14, limit: 13 })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_oracles_reveal_their_count(n in 2usize..=10, seed in any::<u64>()) {
        let f = Oracle::parse(n, "random", seed).unwrap();
        let g = run_gadget(&f).unwrap();
        prop_assert_eq!(g.implied_s, f.count());
        let want = closed_form(n, f.count());
        prop_assert!((g.alpha[0] - want[0]).abs() < 1e-12 && (g.alpha[1] - want[1]).abs() < 1e-12);
        prop_assert!(g.probability >= 0.25);
    }

    #[test]
    fn residual_ignores_sample_order(seed in 0u64..1000, shift in 1usize..8) {
        let run = clean_run(&[1, 5, 8, 12], 8, seed);
        let truth = ModeSet::new(vec![2, 3, 5, 7], 12).unwrap();
        let mut rotated = run.samples.clone();
        rotated.rotate_left(shift);
        let (a, b) = (residual(&run.samples, well(), &truth), residual(&rotated, well(), &truth));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        let fit = solve_mode_set(&rotated, well(), 4, 12, 0.0, 0).unwrap();
        prop_assert_eq!(fit.best.set, vec![1, 5, 8, 12]);
    }
}

// --- reading s

#[test]
fn two_level_velocity_matches_the_superposition() {
    let level = TwoLevel::for_count(4, 3, well()).unwrap();
    let field = level.superposition().unwrap();
    let mut v = [0.0];
    for (x, t) in [(0.3, 0.1), (1.2, 1.7), (2.9, 3.3), (1.5708, 0.8)] {
        field.velocity(&field.slice(t), &[x], &mut v);
        assert!((v[0] - level.velocity(x, t)).abs() < 1e-12 * v[0].abs().max(1.0), "{x} {t}");
    }
}

#[test]
fn rms_speed_matches_a_riemann_sum() {
    let level = TwoLevel::for_count(4, 1, well()).unwrap();
    let field = level.superposition().unwrap();
    let t = 0.25 * level.period();
    let m = 20_000;
    let h = PI / m as f64;
    let mut v = [0.0];
    let sum: f64 = (0..m)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            field.velocity(&field.slice(t), &[x], &mut v);
            v[0] * v[0] * field.density(&[x], t) * h
        })
        .sum();
    assert!((rms_speed(&level) / sum.sqrt() - 1.0).abs() < 1e-4);
}

#[test]
fn zero_count_reads_as_zero() {
    let app = PointerApparatus::with_resolution(1e-5).unwrap();
    let summary = read_s_trials(0, &app, &ReadConfig::default(), 200, 5).unwrap();
    assert_eq!(summary.correct, 200);
}

#[test]
fn a_single_marked_input_is_seen() {
    let app = PointerApparatus::with_resolution(1e-5).unwrap();
    let summary = read_s_trials(1, &app, &ReadConfig::default(), 1000, 6).unwrap();
    assert!(summary.rate >= 0.99, "{}", summary.rate);
}

#[test]
fn fitted_count_tracks_the_true_count() {
    let app = PointerApparatus::with_resolution(1e-6).unwrap();
    let config = ReadConfig::default();
    for s in 0..16u64 {
        let summary = read_s_trials(s, &app, &config, 21, 40 + s).unwrap();
        assert!((summary.median_s_hat - s as f64).abs() <= 1.0, "s={s}: {}", summary.median_s_hat);
    }
}

#[test]
fn full_count_is_stationary() {
    // f = 1 everywhere leaves only phi_2
    let level = TwoLevel::for_count(4, 16, well()).unwrap();
    let app = PointerApparatus::with_resolution(1e-5).unwrap();
    let r = read_s_via_trajectory(&level, &app, &ReadConfig::default(), 1).unwrap();
    assert!(!r.positive);
    assert_eq!(r.s_hat, 0.0);
    assert!(r.samples.iter().all(|p| p.v_true.abs() < 1e-12));
}

#[test]
fn coarse_pointer_is_refused() {
    let level = TwoLevel::for_count(4, 1, well()).unwrap();
    let app = PointerApparatus::with_resolution(0.01).unwrap();
    match read_s_via_trajectory(&level, &app, &ReadConfig::default(), 0) {
        Err(Error::ResolutionTooCoarse { min_s, .. }) => assert!(min_s > 1),
        other => panic!("{other:?}"),
    }
}

use proptest::prelude::*;
use subquantum_core::ensembles::DistributionSpec;
use subquantum_core::stats;
use subquantum_core::Error;
use subquantum_signalling::*;

fn equilibrium() -> PairScenario {
    PairScenario::default().with_spec(DistributionSpec::Equilibrium)
}

/// `x_B -> x_B + s x_A` on independent normals.
fn shear_correlation(s: f64, sigma_a: f64, sigma_b: f64) -> f64 {
    s * sigma_a / (sigma_b * sigma_b + s * s * sigma_a * sigma_a).sqrt()
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n
}

#[test]
fn preparation_correlates_the_pair() {
    let sc = equilibrium();
    let p = prepare_pairs(&sc, 20_000, 7).unwrap();
    let s = sc.coupling * sc.t_prep;
    let want = shear_correlation(s, sc.sigma_a, sc.sigma_b);
    assert!((p.quantum_correlation() - want).abs() < 1e-6, "{} vs {want}", p.quantum_correlation());
    assert!((p.ensemble_correlation() - want).abs() < 0.01, "{} vs {want}", p.ensemble_correlation());
}

#[test]
fn narrowed_ensemble_keeps_its_shape_through_preparation() {
    // The interaction leaves x_A fixed and shears x_B, so under
    // |psi0|^(2 beta) the variances at t0 are sigma_a^2/beta and
    // (sigma_b^2 + s^2 sigma_a^2)/beta.
    let sc = PairScenario::default();
    let p = prepare_pairs(&sc, 40_000, 3).unwrap();
    let s = sc.coupling * sc.t_prep;
    let va = variance(&p.ensemble.coordinate(0));
    let vb = variance(&p.ensemble.coordinate(1));
    let se = (2.0f64 / 40_000.0).sqrt();
    assert!((va / 0.5 - 1.0).abs() < 5.0 * se, "{va}");
    assert!((vb / ((1.0 + s * s) / 2.0) - 1.0).abs() < 5.0 * se, "{vb}");
    assert!((p.ensemble_correlation() - shear_correlation(s, 1.0, 1.0)).abs() < 0.01);
}

#[test]
fn zero_coupling_leaves_the_pair_uncorrelated() {
    let sc = PairScenario { coupling: 0.0, ..equilibrium() };
    let p = prepare_pairs(&sc, 20_000, 11).unwrap();
    assert!(p.quantum_correlation().abs() < 1e-10);
    assert!(p.ensemble_correlation().abs() < 4.0 / (20_000f64).sqrt());
}

#[test]
fn quantum_marginal_at_a_ignores_the_setting() {
    let p = prepare_pairs(&equilibrium(), 10_000, 1).unwrap();
    for setting in [DEFAULT_SETTING, BSetting::Kick { strength: 2.0, wavenumber: 1.0 }] {
        let r = run_signal_experiment(&p, setting, DEFAULT_T_SIGNAL, DEFAULT_BINS).unwrap();
        assert!(r.quantum_difference < 1e-8, "{}", r.quantum_difference);
        for m in &r.marginals {
            assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(r.edges.len(), DEFAULT_BINS + 1);
    }
}

#[test]
fn equilibrium_pairs_show_no_signal() {
    let threshold = bonferroni_threshold(DEFAULT_BINS + 2, 0.05);
    for seed in 0..3 {
        let p = prepare_pairs(&equilibrium(), 20_000, seed).unwrap();
        let r = run_signal_experiment(&p, DEFAULT_SETTING, DEFAULT_T_SIGNAL, DEFAULT_BINS).unwrap();
        assert!(r.max_z < 3.0, "seed {seed}: {}", r.max_z);
        assert!(!r.signal_detected());
        assert_eq!(r.threshold, threshold);
    }
}

#[test]
fn narrowed_pairs_signal_at_the_default_size() {
    let p = prepare_pairs(&PairScenario::default(), 100_000, 5).unwrap();
    let r = run_signal_experiment(&p, DEFAULT_SETTING, DEFAULT_T_SIGNAL, DEFAULT_BINS).unwrap();
    assert!(r.max_z > 5.0, "{}", r.max_z);
    assert!(r.signal_detected());
    assert!(r.quantum_difference < 1e-8);
}

#[test]
fn none_against_itself_is_identical() {
    let p = prepare_pairs(&PairScenario::default(), 10_000, 9).unwrap();
    let r = run_signal_experiment(&p, BSetting::None, DEFAULT_T_SIGNAL, DEFAULT_BINS).unwrap();
    assert_eq!(r.marginals[0], r.marginals[1]);
    assert!(r.difference.iter().all(|d| *d == 0.0));
    assert_eq!(r.max_z, 0.0);

    let again = prepare_pairs(&PairScenario::default(), 10_000, 9).unwrap();
    assert_eq!(p.ensemble.points(), again.ensemble.points());
    let r2 = run_signal_experiment(&again, BSetting::None, DEFAULT_T_SIGNAL, DEFAULT_BINS).unwrap();
    assert_eq!(r.to_text(), r2.to_text());
}

#[test]
fn beta_sweep_reports_each_beta() {
    let sweep = beta_sweep(&PairScenario::default(), &[1.0, 2.0], 20_000, DEFAULT_SETTING, DEFAULT_T_SIGNAL, DEFAULT_BINS, 4).unwrap();
    assert_eq!(sweep.len(), 2);
    assert_eq!(sweep[0].0, 1.0);
    assert!(sweep[0].1.max_z < 3.0);
    assert!(sweep[1].1.max_z > sweep[0].1.max_z);
}

#[test]
fn bad_requests_are_refused() {
    assert!(matches!(prepare_pairs(&PairScenario::default(), 100, 0), Err(Error::SampleTooSmall { .. })));
    let bad = PairScenario { sigma_b: 0.0, ..PairScenario::default() };
    assert!(matches!(prepare_pairs(&bad, 10_000, 0), Err(Error::InvalidParameter { .. })));
    let p = prepare_pairs(&PairScenario::default(), 10_000, 0).unwrap();
    assert!(matches!(run_setting(&p, BSetting::None, 0.1), Err(Error::InvalidParameter { .. })));
    assert!(run_signal_experiment(&p, BSetting::None, DEFAULT_T_SIGNAL, 0).is_err());
}

#[test]
fn small_grid_overflow_is_reported() {
    let sc = PairScenario { half_width: 8.0, points: 64, ..PairScenario::default() };
    let p = prepare_pairs(&sc, 10_000, 0).unwrap();
    let err = run_setting(&p, DEFAULT_SETTING, 3.0).unwrap_err();
    assert!(matches!(err, Error::DomainOverflow { .. }), "{err:?}");
}

#[test]
fn setting_round_trips_through_json() {
    let text = serde_json::to_string(&DEFAULT_SETTING).unwrap();
    assert!(text.contains("\"kind\":\"step\""), "{text}");
    assert_eq!(serde_json::from_str::<BSetting>(&text).unwrap(), DEFAULT_SETTING);
}

proptest! {
    #[test]
    fn bonferroni_threshold_hits_the_level(k in 1usize..200, alpha in 1e-4f64..0.5) {
        let z = bonferroni_threshold(k, alpha);
        let level = 2.0 * k as f64 * stats::normal_sf(z);
        prop_assert!((level / alpha - 1.0).abs() < 1e-8);
        prop_assert!(bonferroni_threshold(k + 1, alpha) > z);
    }
}

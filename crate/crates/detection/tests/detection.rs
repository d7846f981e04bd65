use proptest::prelude::*;
use subquantum_core::rng;
use subquantum_core::stats;
use subquantum_core::Error;
use subquantum_detection::*;

/// Composite Simpson on `[0, 60 / lambda]` with a fixed fine panel count.
fn simpson(f: impl Fn(f64) -> f64, b: f64) -> f64 {
    let n = 200_000;
    let h = b / n as f64;
    let mut s = f(0.0) + f(b);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn radial_density_moments_by_quadrature() {
    for &l in &[0.5, 1.0, 2.0] {
        let p = RadialParent::Scaled { lambda: l };
        assert!((simpson(|r| p.pdf(r), 60.0 / l) - 1.0).abs() < 1e-10);
    }
    let mean = simpson(|r| r * pdf_eq(r), 60.0);
    let second = simpson(|r| r * r * pdf_eq(r), 60.0);
    assert!((mean - 1.5).abs() < 1e-10);
    assert!((second - mean * mean - 0.75).abs() < 1e-10);
    let (m, v) = RadialParent::Equilibrium.moments().unwrap();
    assert!((m - MU_EQ).abs() < 1e-10 && (v - VAR_EQ).abs() < 1e-10);
}

#[test]
fn sample_means_follow_the_parent() {
    let sigma = VAR_EQ.sqrt();
    let s = draw_cloud_sample(&RadialParent::Equilibrium, 100_000, 10_000, 1).unwrap();
    let m = s.radii.iter().sum::<f64>() / 1e4;
    assert!((m - 1.5).abs() < 4.0 * sigma / 100.0, "{m}");
    let s = draw_cloud_sample(&RadialParent::Scaled { lambda: 2.0 }, 100_000, 10_000, 2).unwrap();
    let m = s.radii.iter().sum::<f64>() / 1e4;
    assert!((m - 0.75).abs() < 4.0 * (sigma / 2.0) / 100.0, "{m}");
}

#[test]
fn subsample_size_limits() {
    assert!(draw_cloud_sample(&RadialParent::Equilibrium, 1000, 100, 0).is_ok());
    assert!(draw_cloud_sample(&RadialParent::Equilibrium, 1000, 101, 0).is_err());
    assert!(draw_cloud_sample(&RadialParent::Equilibrium, 1000, 1001, 0).is_err());
}

#[test]
fn draws_are_distinct_atoms_and_seeded() {
    let a = draw_cloud_sample(&RadialParent::Equilibrium, 20_000, 2000, 9).unwrap();
    let b = draw_cloud_sample(&RadialParent::Equilibrium, 20_000, 2000, 9).unwrap();
    assert_eq!(a, b);
    let mut r = a.radii.clone();
    r.sort_by(f64::total_cmp);
    r.dedup();
    assert_eq!(r.len(), 2000);
}

fn rejection_rates(parent: RadialParent, n: usize, reps: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let cfg = DetectionConfig { parent, n_cloud: 10 * n, n_sample: n, repetitions: reps, ..Default::default() };
    let reports = run_repetitions(&cfg, seed).unwrap();
    (
        reports.iter().map(|r| r.p_z).collect(),
        reports.iter().map(|r| r.chi2.p).collect(),
        reports.iter().map(|r| r.ks.p).collect(),
    )
}

#[test]
fn mean_test_is_calibrated_under_equilibrium() {
    let (pz, pc, pk) = rejection_rates(RadialParent::Equilibrium, 1000, 1000, 11);
    let rate = pz.iter().filter(|&&p| p < 0.05).count() as f64 / 1000.0;
    assert!((rate - 0.05).abs() <= 0.02, "{rate}");
    for p in [pz, pc, pk] {
        let d = stats::ks_statistic(&p, |u| u.clamp(0.0, 1.0));
        assert!(d < 0.05, "KS distance of p-values from uniform {d}");
    }
}

#[test]
fn slight_scaling_is_detected() {
    let (pz, _, _) = rejection_rates(RadialParent::Scaled { lambda: 1.1 }, 10_000, 100, 12);
    let hits = pz.iter().filter(|&&p| p < 1e-3).count();
    assert!(hits >= 99, "{hits}");
    // power oracle: the z-shift sqrt(N') (1.5 - 1.5/1.1) / sigma_eq
    let shift = 100.0 * (1.5 - 1.5 / 1.1) / VAR_EQ.sqrt();
    let power = stats::normal_cdf(shift - 3.29) + stats::normal_cdf(-shift - 3.29);
    assert!(power > 0.999);
}

#[test]
fn likelihood_ratio_direction_and_magnitude() {
    let eq = draw_cloud_sample(&RadialParent::Equilibrium, 100_000, 10_000, 3).unwrap();
    assert!(likelihood_ratio(&eq.radii, &RadialParent::Scaled { lambda: 3.0 }).unwrap().log_ratio > 100.0);
    assert!(matches!(
        likelihood_ratio(&eq.radii, &RadialParent::Lomax { alpha: 1.5, scale: 1.0 }),
        Err(Error::UndefinedVariance)
    ));

    // Monte-Carlo oracle: draw sample means directly from their normal law
    // and average the closed-form log-ratio.
    let (m0, v0, m1, v1, n): (f64, f64, f64, f64, f64) = (1.5, 0.75, 1.5 / 1.2, 0.75 / 1.44, 1e4);
    let mut r = rng::stream(77, 0);
    let gauss = rand_distr::Normal::new(m1, (v1 / n).sqrt()).unwrap();
    let mut acc = 0.0;
    for _ in 0..20_000 {
        let x: f64 = rand_distr::Distribution::sample(&gauss, &mut r);
        acc += -0.5 * ((x - m0).powi(2) / (v0 / n) - (x - m1).powi(2) / (v1 / n)) - 0.5 * (v0 / v1).ln();
    }
    let oracle = acc / 20_000.0;
    let mut lrs = Vec::new();
    for k in 0..20 {
        let s = draw_cloud_sample(&RadialParent::Scaled { lambda: 1.2 }, 100_000, 10_000, 100 + k).unwrap();
        lrs.push(likelihood_ratio(&s.radii, &RadialParent::Scaled { lambda: 1.2 }).unwrap().log_ratio);
    }
    let mean_lr = lrs.iter().sum::<f64>() / lrs.len() as f64;
    assert!(lrs.iter().all(|&l| l < 0.0));
    assert!(((mean_lr - oracle) / oracle).abs() < 0.2, "{mean_lr} vs {oracle}");
}

#[test]
fn fit_recovers_the_scale() {
    let eq = draw_cloud_sample(&RadialParent::Equilibrium, 100_000, 10_000, 5).unwrap();
    let f = fit_parent(&eq).unwrap();
    assert!(f.ci.0 < 1.0 && 1.0 < f.ci.1, "{f:?}");
    assert!(f.gof.p > 1e-3);
    let two = draw_cloud_sample(&RadialParent::Scaled { lambda: 2.0 }, 1_000_000, 100_000, 6).unwrap();
    let f = fit_parent(&two).unwrap();
    assert!(f.lambda > 1.95 && f.lambda < 2.05, "{f:?}");
}

#[test]
fn fit_refuses_a_time_dependent_parent_and_reports_boundaries() {
    let p = RadialParent::Relaxing { lambda0: 2.0, tau: 1.0, observed_at: 0.5 };
    let s = draw_cloud_sample(&p, 10_000, 1000, 1).unwrap();
    assert_eq!(fit_parent(&s), Err(Error::TimeDependentParent));
    let far = draw_cloud_sample(&RadialParent::Scaled { lambda: 30.0 }, 10_000, 1000, 1).unwrap();
    assert!(matches!(fit_parent(&far), Err(Error::BoundaryHit { .. })));
}

#[test]
fn confidence_interval_shrinks_as_root_n() {
    let mut widths = Vec::new();
    for (k, &n) in [1000usize, 10_000, 100_000].iter().enumerate() {
        let s = draw_cloud_sample(&RadialParent::Scaled { lambda: 1.3 }, 10 * n, n, 40 + k as u64).unwrap();
        let f = fit_parent(&s).unwrap();
        widths.push(f.ci.1 - f.ci.0);
    }
    for w in widths.windows(2) {
        let ratio = w[0] / w[1];
        let ideal = 10f64.sqrt();
        assert!(ratio > ideal / 1.5 && ratio < ideal * 1.5, "{widths:?}");
    }
}

#[test]
fn verdicts_follow_the_threshold() {
    let s = draw_cloud_sample(&RadialParent::Scaled { lambda: 1.5 }, 100_000, 10_000, 8).unwrap();
    let r = analyze(&s, None, DEFAULT_LOG_RATIO_THRESHOLD).unwrap();
    assert_eq!(r.verdict, Verdict::Nonequilibrium);
    let e = draw_cloud_sample(&RadialParent::Equilibrium, 100_000, 10_000, 8).unwrap();
    let r = analyze(&e, Some(RadialParent::Scaled { lambda: 1.5 }), DEFAULT_LOG_RATIO_THRESHOLD).unwrap();
    assert_eq!(r.verdict, Verdict::Equilibrium);
    assert!(r.p_z >= 0.0 && r.p_z <= 1.0 && r.chi2.p >= 0.0 && r.chi2.p <= 1.0);
    assert!((r.std_err - stats::mean_var(&e.radii).1.sqrt() / 100.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fit_is_scale_equivariant(seed in 0u64..1000, k in -3i32..4, lambda in 0.5f64..3.0) {
        let s = draw_cloud_sample(&RadialParent::Scaled { lambda }, 20_000, 2000, seed).unwrap();
        let c = 2f64.powi(k);
        let scaled: Vec<f64> = s.radii.iter().map(|r| r * c).collect();
        let a = fit_radii(&s.radii);
        let b = fit_radii(&scaled);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!((b.lambda - a.lambda / c).abs() <= 1e-12 * a.lambda / c),
            (Err(_), _) | (_, Err(_)) => {}
        }
    }

    #[test]
    fn p_values_are_probabilities(seed in 0u64..1000, lambda in 0.3f64..3.0) {
        let s = draw_cloud_sample(&RadialParent::Scaled { lambda }, 5000, 500, seed).unwrap();
        let r = analyze(&s, None, DEFAULT_LOG_RATIO_THRESHOLD).unwrap();
        for p in [r.p_z, r.chi2.p, r.ks.p] {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}

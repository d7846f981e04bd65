use proptest::prelude::*;
use subquantum_core::grid::{Axis, Grid};
use subquantum_core::potential::Potential;
use subquantum_core::propagate::propagate;
use subquantum_core::stats;
use subquantum_core::wavefunction::Wavefunction;
use subquantum_core::Error;
use subquantum_qkd::*;

/// `(1 - |<u0|u1>|^2) / 2` with the overlap taken by quadrature of the
/// carriers after free flight to Bob.
fn quadrature_sift_rate(config: &B92Config) -> f64 {
    let k = (-config.overlap.ln() / 2.0).sqrt() / config.sigma;
    let grid = Grid::line(Axis::periodic(-30.0, 30.0, 4096).unwrap());
    let steps = 120;
    let carry = |k: f64| {
        let psi = Wavefunction::gaussian(grid.clone(), &[(0.0, config.sigma, k)]).unwrap();
        propagate(&psi, &Potential::Free, config.transit / steps as f64, steps).unwrap()
    };
    let (u0, u1) = (carry(k), carry(-k));
    let o = u0.inner(&u1).unwrap().norm() / (u0.norm() * u1.norm());
    0.5 * (1.0 - o * o)
}

fn with_eve(resolution: f64) -> B92Config {
    B92Config::default().with_eve(Some(EveConfig { resolution, ..EveConfig::default() }))
}

#[test]
fn sift_rate_matches_quadrature() {
    let config = B92Config { seed: 3, ..B92Config::default() };
    let t = run_b92(&config).unwrap();
    let want = quadrature_sift_rate(&config);
    assert!((want - 0.375).abs() < 1e-6, "{want}");
    let se = (want * (1.0 - want) / config.rounds as f64).sqrt();
    assert!((t.summary.sift_rate - want).abs() < 3.0 * se, "{} vs {want}", t.summary.sift_rate);
}

#[test]
fn noiseless_channel_has_no_errors() {
    let t = run_b92(&B92Config::default()).unwrap();
    assert!(t.summary.qber < 0.01);
    assert!(t.summary.eve_agreement.is_none());
    assert!(t.rounds.iter().all(|r| r.eve_bit.is_none()));
}

#[test]
fn fine_eve_reads_the_key_without_disturbing_it() {
    let base = run_b92(&B92Config::default()).unwrap();
    let tapped = run_b92(&with_eve(1e-4)).unwrap();
    let agreement = tapped.summary.eve_agreement.unwrap();
    assert!(agreement >= 0.99, "{agreement}");
    let change = (tapped.summary.qber - base.summary.qber).abs();
    assert!(change < 3.0 * base.summary.qber_se, "{change}");
    // Bob's side of the transcript is untouched.
    for (a, b) in base.rounds.iter().zip(&tapped.rounds) {
        assert_eq!((a.alice_bit, a.hidden_x0, a.bob_basis, a.bob_pass, a.bob_bit), (b.alice_bit, b.hidden_x0, b.bob_basis, b.bob_pass, b.bob_bit));
    }
}

#[test]
fn bob_marginals_do_not_see_eve() {
    let rates = |eve: Option<EveConfig>| -> Vec<f64> {
        (0..20)
            .map(|seed| {
                let c = B92Config { rounds: 1000, seed: 100 + seed, ..B92Config::default() }.with_eve(eve);
                run_b92(&c).unwrap().summary.sift_rate
            })
            .collect()
    };
    let off = rates(None);
    let on = rates(Some(EveConfig { resolution: 1e-3, ..EveConfig::default() }));
    let d = stats::ks_two_sample(&off, &on);
    assert!(stats::ks_two_sample_pvalue(d, off.len(), on.len()) > 0.001);
}

#[test]
fn sweep_agreement_rises_with_resolution() {
    let config = B92Config { rounds: 4000, seed: 8, ..B92Config::default() };
    let sweep = eve_sweep(&config, &[1e-4, 1e-2, 1e-3]).unwrap();
    let res: Vec<f64> = sweep.points.iter().map(|p| p.resolution).collect();
    assert_eq!(res, vec![1e-2, 1e-3, 1e-4]);
    assert!(sweep.monotone, "{:?}", sweep.points);
    assert!(sweep.points[0].agreement > 0.5);
    for p in &sweep.points {
        assert!(p.induced_qber.abs() < 3.0 * sweep.baseline.qber_se, "{p:?}");
    }
    assert!(matches!(eve_sweep(&config, &[1e-3, 1e-4]), Err(Error::InvalidParameter { .. })));
}

#[test]
fn coarse_eve_still_beats_guessing() {
    let t = run_b92(&B92Config { rounds: 2000, ..with_eve(0.5) }).unwrap();
    let a = t.summary.eve_agreement.unwrap();
    assert!(a > 0.5 && a < 0.99, "{a}");
}

#[test]
fn transcripts_repeat_for_a_seed() {
    let c = B92Config { rounds: 500, seed: 42, ..with_eve(1e-3) };
    let a = run_b92(&c).unwrap();
    let b = run_b92(&c).unwrap();
    assert_eq!(a.to_text(), b.to_text());
    let other = run_b92(&B92Config { seed: 43, ..c }).unwrap();
    assert_ne!(a.to_text(), other.to_text());
}

#[test]
fn transcript_text_has_one_row_per_round() {
    let t = run_b92(&B92Config { rounds: 200, ..with_eve(1e-3) }).unwrap();
    let text = t.to_text();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 200);
    assert!(text.lines().nth(1).unwrap().contains("hidden_x0"));
    assert!(rows.iter().all(|r| r.split_whitespace().count() == 8));
}

#[test]
fn bad_configs_are_refused() {
    for overlap in [0.0, 1.0, 1.5] {
        let c = B92Config { overlap, ..B92Config::default() };
        assert!(matches!(run_b92(&c), Err(Error::InvalidParameter { .. })));
    }
    assert!(matches!(run_b92(&B92Config { rounds: 10, ..B92Config::default() }), Err(Error::SampleTooSmall { .. })));
    let late = B92Config { transit: 0.9, ..with_eve(1e-4) };
    assert!(matches!(run_b92(&late), Err(Error::InvalidParameter { name: "eve.window", .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn every_round_obeys_the_b92_rule(seed in any::<u64>(), overlap in 0.05f64..0.95, eve in any::<bool>()) {
        let c = B92Config { rounds: 200, overlap, seed, ..B92Config::default() };
        let c = if eve { c.with_eve(Some(EveConfig { resolution: 1e-3, ..EveConfig::default() })) } else { c };
        let t = run_b92(&c).unwrap();
        for r in &t.rounds {
            prop_assert!(r.obeys_sift_rule());
            // A conclusive test never contradicts Alice.
            if r.sifted {
                prop_assert_eq!(r.bob_bit, Some(r.alice_bit));
            }
        }
        prop_assert_eq!(t.summary.qber, 0.0);
        prop_assert_eq!(t.summary.sifted, t.rounds.iter().filter(|r| r.sifted).count());
    }
}

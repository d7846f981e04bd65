//! End-to-end acceptance runs at full size. Prints one line per criterion
//! and exits non-zero if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use serde_json::Value;
use subq_measurement::{joint_density_check, measure_many, DiscriminationScenario, PointerApparatus};
use subquantum_core::ensembles::distribution::DistributionSpec;
use subquantum_core::ensembles::relaxation::{central_third, run_relaxation, RelaxationConfig, WellScenario};
use subquantum_core::grid::{Axis, Grid};
use subquantum_core::potential::Potential;
use subquantum_core::propagate::propagate;
use subquantum_core::rng;
use subquantum_core::stats;
use subquantum_core::wavefunction::Wavefunction;
use subquantum_detection::{run_repetitions, DetectionConfig, RadialParent, MU_EQ, VAR_EQ};
use subquantum_qkd::{run_b92, B92Config, EveConfig};
use subquantum_readout::{read_s_trials, run_gadget, run_recovery, Oracle, ReadConfig, RecoveryConfig};
use subquantum_signalling::{prepare_pairs, run_signal_experiment, BSetting, PairScenario, DEFAULT_BINS, DEFAULT_T_SIGNAL};

type Outcome = Result<(bool, String), String>;

fn fail_msg<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn well_config(particles: usize, cells: Vec<usize>, judged: usize) -> RelaxationConfig {
    RelaxationConfig {
        scenario: WellScenario { modes_per_axis: 4, ..WellScenario::default() },
        particles,
        cells,
        judged_cells: judged,
        ..RelaxationConfig::default()
    }
}

fn equivariance() -> Outcome {
    let start = Instant::now();
    let cfg = well_config(100_000, vec![64], 64);
    let report = run_relaxation(&cfg, &DistributionSpec::Equilibrium, 101).map_err(fail_msg)?;
    let secs = start.elapsed().as_secs_f64();
    let tv = report.tv_series(64).expect("configured");
    let at = |p: f64| report.samples.iter().position(|s| (s.periods - p).abs() < 1e-9).map(|k| tv[k]);
    let picks = [at(0.0), at(5.0), at(10.0)];
    let picks: Vec<f64> = picks.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
    let ok = picks.iter().all(|&v| v < 0.05) && secs < 300.0;
    Ok((ok, format!("TV at 0/5/10 periods = {:.4}/{:.4}/{:.4}, {secs:.0} s", picks[0], picks[1], picks[2])))
}

fn relaxation() -> Outcome {
    let cfg = well_config(100_000, vec![16, 32, 64], 32);
    let spec = central_third(&cfg.scenario);
    let report = run_relaxation(&cfg, &spec, 102).map_err(fail_msg)?;
    let monotone = report.h_non_increasing(32, 0.05).expect("configured");
    let ratio = report.h_ratio(32).expect("configured");
    Ok((monotone && ratio < 0.3, format!("H non-increasing: {monotone}, H(final)/H(0) = {ratio:.4} at 32 cells")))
}

fn pointer_model() -> Outcome {
    let grid = Grid::line(Axis::periodic(-12.0, 12.0, 1024).map_err(fail_msg)?);
    let psi = Wavefunction::gaussian(grid, &[(0.0, 1.0, 0.0)]).map_err(fail_msg)?;
    let app = PointerApparatus::new(1.0, 0.5, 0.1).map_err(fail_msg)?;
    let joint = joint_density_check(&psi, &app, 0.5, 1_000_000, [64, 64], 103).map_err(fail_msg)?;
    let records = measure_many(&psi, &app, 100_000, 104).map_err(fail_msg)?;
    let inside = records.iter().filter(|r| r.contains_x0()).count();
    let exact = app.resolution() == 0.1 / (2.0 * 1.0 * 0.5);
    let ok = joint.within(4.0) && inside == records.len() && exact;
    Ok((ok, format!("joint max z {:.3} over {} cells, {inside}/{} intervals hold x0, resolution exact: {exact}", joint.max_z, joint.active_cells, records.len())))
}

fn detection() -> Outcome {
    let eq = DetectionConfig { repetitions: 1000, ..DetectionConfig::default() };
    let reports = run_repetitions(&eq, 105).map_err(fail_msg)?;
    let uniform = |p: Vec<f64>| {
        let n = p.len();
        stats::ks_pvalue(stats::ks_statistic(&p, |u| u.clamp(0.0, 1.0)), n)
    };
    let ks = [
        uniform(reports.iter().map(|r| r.p_z).collect()),
        uniform(reports.iter().map(|r| r.chi2.p).collect()),
        uniform(reports.iter().map(|r| r.ks.p).collect()),
    ];
    let calibrated = ks.iter().all(|&p| p > 0.05);
    let first = &reports[0];
    let tol = 4.0 * VAR_EQ.sqrt() / (first.n as f64).sqrt();
    let mean_ok = (first.mean - MU_EQ).abs() < tol;

    let scaled = DetectionConfig { parent: RadialParent::Scaled { lambda: 1.1 }, repetitions: 1000, ..DetectionConfig::default() };
    let reports = run_repetitions(&scaled, 106).map_err(fail_msg)?;
    let rejected = reports.iter().filter(|r| r.p_z < 1e-3).count();
    let power = rejected as f64 / reports.len() as f64;
    let ok = calibrated && mean_ok && power >= 0.99;
    Ok((
        ok,
        format!(
            "KS p of p-values (z, chi2, ks) = {:.3}/{:.3}/{:.3}, mean {:.4} vs 1.5 +- {tol:.4}, lambda=1.1 rejected {rejected}/1000",
            ks[0], ks[1], ks[2], first.mean
        ),
    ))
}

fn signalling() -> Outcome {
    let equilibrium = PairScenario::default().with_spec(DistributionSpec::Equilibrium);
    let settings = [BSetting::Step { strength: std::f64::consts::PI, width: 1.0 }, BSetting::Kick { strength: 2.0, wavenumber: 1.0 }];
    let mut worst = 0.0f64;
    let mut quiet = 0;
    let mut quantum = 0.0f64;
    for run in 0..20u64 {
        let p = prepare_pairs(&equilibrium, 100_000, rng::derive(107, run)).map_err(fail_msg)?;
        let mut run_max = 0.0f64;
        for &setting in &settings {
            let r = run_signal_experiment(&p, setting, DEFAULT_T_SIGNAL, DEFAULT_BINS).map_err(fail_msg)?;
            run_max = run_max.max(r.max_z);
            quantum = quantum.max(r.quantum_difference);
        }
        worst = worst.max(run_max);
        quiet += usize::from(run_max < 4.0);
    }
    let p = prepare_pairs(&PairScenario::default(), 100_000, 108).map_err(fail_msg)?;
    let r = run_signal_experiment(&p, settings[0], DEFAULT_T_SIGNAL, DEFAULT_BINS).map_err(fail_msg)?;
    quantum = quantum.max(r.quantum_difference);
    let ok = quiet == 20 && r.max_z > 5.0 && quantum < 1e-8;
    Ok((ok, format!("equilibrium below 4 in {quiet}/20 runs (worst {worst:.3}), beta=2 max z {:.3}, quantum difference {quantum:e}", r.max_z)))
}

fn discrimination() -> Outcome {
    let s = DiscriminationScenario::for_overlap(0.8, 1.0, 1e-3).map_err(fail_msg)?;
    let grid = Grid::line(Axis::periodic(-20.0, 20.0, 1024).map_err(fail_msg)?);
    let snapshot = |s: &DiscriminationScenario| -> Result<Vec<String>, String> {
        s.states.iter().map(|st| st.to_wavefunction(&grid, 0.0).map(|w| w.to_text()).map_err(fail_msg)).collect()
    };
    let before = snapshot(&s)?;
    let copy = s;
    let summary = s.run_trials(1000, 109).map_err(fail_msg)?;
    let unchanged = copy == s && before == snapshot(&s)?;
    let ok = s.window == 8 && summary.accuracy >= 0.99 && unchanged;
    Ok((ok, format!("{}/{} correct over an 8-sample window, states unchanged: {unchanged}", summary.correct, summary.trials)))
}

/// `(1 - |<u0|u1>|^2) / 2` with the overlap of the carriers taken by
/// quadrature after free flight.
fn quadrature_sift_rate(config: &B92Config) -> Result<f64, String> {
    let k = (-config.overlap.ln() / 2.0).sqrt() / config.sigma;
    let grid = Grid::line(Axis::periodic(-30.0, 30.0, 4096).map_err(fail_msg)?);
    let steps = 120;
    let carry = |k: f64| -> Result<Wavefunction, String> {
        let psi = Wavefunction::gaussian(grid.clone(), &[(0.0, config.sigma, k)]).map_err(fail_msg)?;
        propagate(&psi, &Potential::Free, config.transit / steps as f64, steps).map_err(fail_msg)
    };
    let (u0, u1) = (carry(k)?, carry(-k)?);
    let o = u0.inner(&u1).map_err(fail_msg)?.norm() / (u0.norm() * u1.norm());
    Ok(0.5 * (1.0 - o * o))
}

fn b92() -> Outcome {
    let base_cfg = B92Config { rounds: 10_000, seed: 110, ..B92Config::default() };
    let base = run_b92(&base_cfg).map_err(fail_msg)?;
    let eve = EveConfig { resolution: 1e-4, ..EveConfig::default() };
    let tapped = run_b92(&base_cfg.clone().with_eve(Some(eve))).map_err(fail_msg)?;
    let agreement = tapped.summary.eve_agreement.unwrap_or(0.0);
    let change = (tapped.summary.qber - base.summary.qber).abs();
    let qber_ok = change < 3.0 * base.summary.qber_se;
    let want = quadrature_sift_rate(&base_cfg)?;
    let se = (want * (1.0 - want) / base_cfg.rounds as f64).sqrt();
    let sift_ok = (base.summary.sift_rate - want).abs() < 3.0 * se;
    let ok = agreement >= 0.99 && qber_ok && sift_ok;
    Ok((
        ok,
        format!(
            "Eve agreement {agreement:.4}, QBER change {change:e} (3 sigma {:e}), sift rate {:.4} vs quadrature {want:.4} +- {:.4}",
            3.0 * base.summary.qber_se,
            base.summary.sift_rate,
            3.0 * se
        ),
    ))
}

fn gadget_errors(f: &Oracle) -> Result<(f64, bool), String> {
    let g = run_gadget(f).map_err(fail_msg)?;
    let size = (1u64 << f.n) as f64;
    let s = f.count() as f64;
    let w = [(size - s) / size, s / size];
    let norm = w[0].hypot(w[1]);
    let err = (g.alpha[0] - w[0] / norm).abs().max((g.alpha[1] - w[1] / norm).abs());
    Ok((err, g.probability >= 0.25))
}

fn readout() -> Outcome {
    let recovery = run_recovery(&RecoveryConfig::default(), 111).map_err(fail_msg)?;

    let mut worst = 0.0f64;
    let mut quarter = true;
    let mut oracles = 0usize;
    for n in 1..=4usize {
        for code in 0u64..1 << (1usize << n) {
            let f = Oracle::from_fn(n, |x| code >> x & 1 == 1).map_err(fail_msg)?;
            let (err, q) = gadget_errors(&f)?;
            worst = worst.max(err);
            quarter &= q;
            oracles += 1;
        }
    }
    for n in 5..=12usize {
        for k in 0..64u64 {
            let f = Oracle::parse(n, "random", rng::derive(112, (n as u64) << 8 | k)).map_err(fail_msg)?;
            let (err, q) = gadget_errors(&f)?;
            worst = worst.max(err);
            quarter &= q;
            oracles += 1;
        }
    }

    let app = PointerApparatus::with_resolution(1e-5).map_err(fail_msg)?;
    let config = ReadConfig { n: 4, ..ReadConfig::default() };
    let one = read_s_trials(1, &app, &config, 1000, 113).map_err(fail_msg)?;
    let zero = read_s_trials(0, &app, &config, 1000, 114).map_err(fail_msg)?;
    let ok = recovery.rate >= 0.99 && worst < 1e-12 && quarter && one.rate >= 0.99 && zero.rate >= 0.99;
    Ok((
        ok,
        format!(
            "recovered {}/{} sets, gadget max error {worst:e} over {oracles} oracles (p >= 1/4: {quarter}), s=1 verdict {:.3}, s=0 verdict {:.3}",
            recovery.exact,
            recovery.trials.len(),
            one.rate,
            zero.rate
        ),
    ))
}

fn lab_run(dir: &Path, args: &[&str]) -> Result<i32, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_subquantum-lab")).args(args).arg("--out").arg(dir).output().map_err(fail_msg)?;
    out.status.code().ok_or_else(|| "killed by a signal".to_string())
}

/// The manifest minus its wall time, which is the one field allowed to vary.
fn stable_manifest(dir: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(dir.join("manifest.json")).map_err(fail_msg)?;
    let mut v: Value = serde_json::from_str(&text).map_err(fail_msg)?;
    v.as_object_mut().ok_or("manifest is not an object")?.remove("wall_time_seconds");
    Ok(v)
}

fn determinism() -> Outcome {
    let scenarios: [&[&str]; 8] = [
        &["relax", "--particles", "2000", "--periods", "1"],
        &["detect", "--n-cloud", "20000", "--n-sample", "2000", "--repetitions", "5", "--lambda", "1.1"],
        &["signal", "--pairs", "10000"],
        &["measure", "--records", "2000", "--joint-particles", "10000"],
        &["discriminate", "--trials", "20"],
        &["qkd-b92", "--rounds", "300", "--eve", "--sweep", "1e-4,1e-2,1"],
        &["readout", "--trials", "3", "--read-trials", "5"],
        &["gadget", "--n", "5"],
    ];
    let tmp = tempfile::tempdir().map_err(fail_msg)?;
    let mut bad = Vec::new();
    let mut files = 0;
    for args in scenarios {
        let name = args[0];
        let (a, b) = (tmp.path().join(format!("{name}-a")), tmp.path().join(format!("{name}-b")));
        let mut full = args.to_vec();
        full.extend(["--seed", "2024"]);
        if lab_run(&a, &full)? != 0 || lab_run(&b, &full)? != 0 {
            bad.push(format!("{name} did not exit 0"));
            continue;
        }
        let ma = stable_manifest(&a)?;
        if ma != stable_manifest(&b)? {
            bad.push(format!("{name} manifest"));
        }
        for f in ma["files"].as_array().into_iter().flatten() {
            let file = f["name"].as_str().unwrap_or_default();
            files += 1;
            if std::fs::read(a.join(file)).map_err(fail_msg)? != std::fs::read(b.join(file)).map_err(fail_msg)? {
                bad.push(format!("{name}/{file}"));
            }
        }
    }
    if bad.is_empty() {
        Ok((true, format!("8 subcommands, {files} data files and manifests identical across reruns")))
    } else {
        Ok((false, format!("differences: {}", bad.join(", "))))
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("equivariance", equivariance),
        ("relaxation", relaxation),
        ("exact pointer model", pointer_model),
        ("detection calibration and power", detection),
        ("signalling contrast", signalling),
        ("discrimination", discrimination),
        ("B92 attack", b92),
        ("readout", readout),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += usize::from(!passed);
        let verdict = if passed { "PASS" } else { "FAIL" };
        println!("criterion {}: {verdict} {name}: {detail} [{:.1} s]", k + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

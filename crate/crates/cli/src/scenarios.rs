//! One runner per subcommand. Each returns its data files, invariant checks
//! and headline numbers; nothing here touches the filesystem.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Map, Value};
use subq_measurement::{joint_density_check, measure_many, records_to_text, DiscriminationScenario, PointerApparatus, PointerShape};
use subquantum_core::ensembles::distribution::DistributionSpec;
use subquantum_core::ensembles::relaxation::{central_third, run_relaxation, RelaxationConfig, WellScenario};
use subquantum_core::grid::{Axis, Grid};
use subquantum_core::packet::GaussianPacket;
use subquantum_core::rng;
use subquantum_core::wavefunction::Wavefunction;
use subquantum_core::{Error, Result};
use subquantum_detection::{run_repetitions, DetectionConfig, RadialParent};
use subquantum_qkd::{eve_sweep, run_b92, B92Config, EveConfig};
use subquantum_readout::{read_s_trials, run_gadget, run_recovery, Oracle, ReadConfig, RecoveryConfig};
use subquantum_signalling::{prepare_pairs, run_signal_experiment, BSetting, PairScenario};

use crate::config::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.to_string(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Output {
    /// File name and contents, in emission order.
    pub files: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub metrics: Map<String, Value>,
    /// Lines for standard output.
    pub summary: Vec<String>,
}

impl Output {
    fn file(&mut self, name: &str, text: String) {
        self.files.push((name.to_string(), text));
    }

    fn metric(&mut self, name: &str, v: impl Serialize) {
        self.metrics.insert(name.to_string(), json!(v));
    }
}

pub fn relax(p: &RelaxParams, seed: u64) -> Result<Output> {
    let modes_per_axis = match p.dim {
        1 => p.modes,
        2 => {
            let m = (p.modes as f64).sqrt().round() as u32;
            if m * m != p.modes {
                return Err(Error::param("modes", format!("{} is not a square, as two dimensions need", p.modes)));
            }
            m
        }
        _ => return Err(Error::param("dim", "must be 1 or 2")),
    };
    let scenario =
        WellScenario { dim: p.dim, length: p.length, modes_per_axis, phase_seed: p.phase_seed, grid_points: p.grid_points };
    let cfg = RelaxationConfig {
        scenario: scenario.clone(),
        particles: p.particles,
        periods: p.periods,
        samples_per_period: p.samples_per_period,
        dt: p.dt,
        stage_tolerance: p.stage_tolerance,
        cells: p.cells.clone(),
        judged_cells: p.judged_cells,
        reference_segments: p.reference_segments,
    };
    let spec = if p.equilibrium { DistributionSpec::Equilibrium } else { central_third(&scenario) };
    let report = run_relaxation(&cfg, &spec, seed)?;
    let mut out = Output::default();
    out.file("relax.txt", report.to_text());

    let finest = *p.cells.iter().max().expect("validated");
    let floor = -3.0 * (finest as f64 / p.particles as f64).sqrt();
    let h_min = report.h_series(finest).expect("configured").into_iter().fold(f64::INFINITY, f64::min);
    out.checks.push(Check::new("h_nonnegative", h_min >= floor, format!("min H at {finest} cells = {h_min:e}, floor {floor:e}")));
    let tv = report.tv_series(finest).expect("configured");
    let tv_max = tv.iter().cloned().fold(0.0, f64::max);
    if p.equilibrium {
        out.checks.push(Check::new("equivariance", tv_max < 0.05, format!("max TV at {finest} cells = {tv_max:e}")));
    } else {
        let ok = report.h_non_increasing(p.judged_cells, 0.05).expect("configured");
        out.checks.push(Check::new("h_non_increasing", ok, format!("tolerance 0.05 H(0) at {} cells", p.judged_cells)));
    }
    let ratio = report.h_ratio(p.judged_cells).expect("configured");
    out.metric("natural_period", report.natural_period);
    out.metric("h_ratio", ratio);
    out.metric("max_tv", tv_max);
    out.metric("steps", report.stats.steps);
    out.metric("clamped", report.stats.clamped);
    out.metric("cells", &p.cells);
    out.metric("comparisons", &report.samples);
    out.summary.push(format!("relax: {} samples, H(final)/H(0) = {ratio:.4} at {} cells", report.samples.len(), p.judged_cells));
    Ok(out)
}

pub fn detect(p: &DetectParams, seed: u64) -> Result<Output> {
    let parent = match p.parent.as_str() {
        "equilibrium" => RadialParent::Equilibrium,
        "scaled" if p.lambda == 1.0 => RadialParent::Equilibrium,
        "scaled" => RadialParent::Scaled { lambda: p.lambda },
        "lomax" => RadialParent::Lomax { alpha: p.alpha, scale: p.scale },
        "relaxing" => RadialParent::Relaxing { lambda0: p.lambda, tau: p.tau, observed_at: p.observed_at },
        other => return Err(Error::param("parent", format!("unknown kind `{other}`"))),
    };
    let cfg = DetectionConfig {
        parent,
        n_cloud: p.n_cloud,
        n_sample: p.n_sample,
        repetitions: p.repetitions,
        candidate: None,
        log_ratio_threshold: p.log_ratio_threshold,
    };
    let reports = run_repetitions(&cfg, seed)?;
    let mut text = String::from("# rep n mean std_err z p_z chi2 chi2_dof chi2_p ks_d ks_p lambda_hat lambda_lo lambda_hi log_ratio verdict\n");
    for (k, r) in reports.iter().enumerate() {
        let (l, lo, hi) = r.fit.map_or((f64::NAN, f64::NAN, f64::NAN), |f| (f.lambda, f.ci.0, f.ci.1));
        let verdict = serde_json::to_value(r.verdict).expect("plain enum");
        let _ = writeln!(
            text,
            "{k} {} {:e} {:e} {:e} {:e} {:e} {} {:e} {:e} {:e} {l:e} {lo:e} {hi:e} {:e} {}",
            r.n,
            r.mean,
            r.std_err,
            r.z,
            r.p_z,
            r.chi2.stat,
            r.chi2.dof,
            r.chi2.p,
            r.ks.d,
            r.ks.p,
            r.likelihood.log_ratio,
            verdict.as_str().unwrap_or("?")
        );
    }
    let mut out = Output::default();
    out.file("detect.txt", text);
    let p_ok = reports.iter().all(|r| (0.0..=1.0).contains(&r.p_z) && (0.0..=1.0).contains(&r.chi2.p));
    out.checks.push(Check::new("p_values_in_range", p_ok, "every p-value in [0, 1]"));
    let rejected = reports.iter().filter(|r| r.p_z < 1e-3).count();
    let mean = reports.iter().map(|r| r.mean).sum::<f64>() / reports.len().max(1) as f64;
    out.metric("rejected_at_1e-3", rejected);
    out.metric("rejection_rate", rejected as f64 / reports.len().max(1) as f64);
    out.metric("mean_of_means", mean);
    out.metric("parent", parent);
    out.metric("chi2_bins", subquantum_detection::analysis::EQ_BINS);
    out.summary.push(format!("detect: {rejected}/{} repetitions rejected at p < 1e-3", reports.len()));
    Ok(out)
}

pub fn signal(p: &SignalParams, seed: u64) -> Result<Output> {
    let spec = if p.beta == 1.0 { DistributionSpec::Equilibrium } else { DistributionSpec::ScaledEquilibrium { beta: p.beta } };
    let scenario = PairScenario {
        sigma_a: p.sigma_a,
        sigma_b: p.sigma_b,
        coupling: p.coupling,
        t_prep: p.t_prep,
        half_width: p.half_width,
        points: p.points,
        dt: p.dt,
        spec,
    };
    let prepared = prepare_pairs(&scenario, p.pairs, seed)?;
    let report = run_signal_experiment(&prepared, BSetting::Step { strength: p.strength, width: p.width }, p.t_signal, p.bins)?;
    let mut out = Output::default();
    out.file("signal.txt", report.to_text());
    out.checks.push(Check::new(
        "quantum_marginal_unchanged",
        report.quantum_difference < 1e-8,
        format!("max |rho_A difference| = {:e}", report.quantum_difference),
    ));
    out.metric("max_z", report.max_z);
    out.metric("unpaired_max_z", report.unpaired_max_z);
    out.metric("threshold", report.threshold);
    out.metric("bins", p.bins);
    out.metric("signal_detected", report.signal_detected());
    out.metric("quantum_correlation", prepared.quantum_correlation());
    out.metric("ensemble_correlation", prepared.ensemble_correlation());
    out.summary.push(format!("signal: max z = {:.3} against threshold {:.3}", report.max_z, report.threshold));
    Ok(out)
}

pub fn measure(p: &MeasureParams, seed: u64) -> Result<Output> {
    let grid = Grid::line(Axis::periodic(-p.half_width, p.half_width, p.points)?);
    let psi = Wavefunction::gaussian(grid, &[(0.0, p.sigma, 0.0)])?;
    let shape = if p.equilibrium_pointer { PointerShape::Equilibrium } else { PointerShape::Uniform };
    let app = PointerApparatus::new(p.coupling, p.duration, p.width)?.with_delta(p.delta)?.with_shape(shape);
    let records = measure_many(&psi, &app, p.records, rng::derive(seed, 0))?;
    let joint = joint_density_check(&psi, &app, p.duration, p.joint_particles, [p.joint_cells; 2], rng::derive(seed, 1))?;
    let mut out = Output::default();
    out.file("records.txt", records_to_text(&records));
    out.file("joint.txt", joint.to_text());
    let outside = records.iter().filter(|r| !r.contains_x0()).count();
    if shape == PointerShape::Uniform {
        out.checks.push(Check::new("interval_contains_x0", outside == 0, format!("{outside} of {} records miss x0", records.len())));
    }
    let exact = p.width / (2.0 * p.coupling * p.duration);
    out.checks.push(Check::new("resolution", app.resolution() == exact, format!("{:e} vs w/2at = {exact:e}", app.resolution())));
    out.checks.push(Check::new("joint_density", joint.within(4.0), format!("max z {:.3} over {} cells", joint.max_z, joint.active_cells)));
    out.metric("resolution", app.resolution());
    out.metric("joint_max_z", joint.max_z);
    out.metric("joint_sup_distance", joint.sup_distance);
    out.metric("joint_cells", [p.joint_cells; 2]);
    out.metric("joint_active_cells", joint.active_cells);
    out.summary.push(format!("measure: resolution {:e}, {} records, joint max z {:.3}", app.resolution(), records.len(), joint.max_z));
    Ok(out)
}

fn discrimination_scenario(p: &DiscriminateParams) -> Result<DiscriminationScenario> {
    let s = DiscriminationScenario {
        window: p.window,
        t_first: p.t_first,
        t_last: p.t_last,
        eps_vel: p.eps_vel,
        dt: p.dt,
        ..DiscriminationScenario::for_overlap(p.overlap, p.sigma, p.resolution)?
    };
    s.validate()?;
    Ok(s)
}

pub fn discriminate(p: &DiscriminateParams, seed: u64) -> Result<Output> {
    let s = discrimination_scenario(p)?;
    let before = s;
    let grid = Grid::line(Axis::periodic(-20.0 * p.sigma, 20.0 * p.sigma, 1024)?);
    let packets: Vec<String> = s.states.iter().map(|st: &GaussianPacket| st.to_wavefunction(&grid, 0.0).map(|w| w.to_text())).collect::<Result<_>>()?;
    let mut text = String::from("# trial truth x0 label score\n");
    let mut correct = 0;
    for i in 0..p.trials {
        let ts = rng::derive(seed, i as u64);
        let truth = 1 + (rng::derive(ts, 2) & 1) as u8;
        let o = s.run_trial(truth, ts)?;
        correct += usize::from(o.correct());
        let _ = writeln!(text, "{i} {truth} {:e} {} {:e}", o.x0, o.decision.label.map_or(0, i32::from), o.decision.score);
    }
    let after: Vec<String> = s.states.iter().map(|st| st.to_wavefunction(&grid, 0.0).map(|w| w.to_text())).collect::<Result<_>>()?;
    let accuracy = correct as f64 / p.trials.max(1) as f64;
    let mut out = Output::default();
    out.file("discriminate.txt", text);
    out.checks.push(Check::new("states_unchanged", before == s && packets == after, "candidate wavefunctions compared bit for bit"));
    out.metric("overlap", s.overlap()?);
    out.metric("correct", correct);
    out.metric("accuracy", accuracy);
    out.summary.push(format!("discriminate: {correct}/{} correct", p.trials));
    Ok(out)
}

fn b92_config(p: &QkdParams, seed: u64) -> B92Config {
    let eve = EveConfig {
        resolution: p.resolution,
        window: p.window,
        t_first: p.t_first,
        t_last: p.t_last,
        eps_vel: p.eps_vel,
        dt: p.dt,
    };
    B92Config { overlap: p.overlap, sigma: p.sigma, rounds: p.rounds, transit: p.transit, eve: None, seed }.with_eve(p.eve.then_some(eve))
}

pub fn qkd(p: &QkdParams, seed: u64) -> Result<Output> {
    let config = b92_config(p, seed);
    let t = run_b92(&config)?;
    let mut out = Output::default();
    out.file("transcript.txt", t.to_text());
    let rule = t.rounds.iter().all(|r| r.obeys_sift_rule());
    out.checks.push(Check::new("sift_rule", rule, "every round follows the B92 sifting rule"));
    out.checks.push(Check::new("conclusive_never_wrong", t.summary.qber == 0.0, format!("qber = {:e}", t.summary.qber)));
    let s = &t.summary;
    out.metric("sift_rate", s.sift_rate);
    out.metric("sift_rate_se", s.sift_rate_se);
    out.metric("expected_sift_rate", s.expected_sift_rate);
    out.metric("qber", s.qber);
    out.metric("eve_agreement", s.eve_agreement);
    if !p.sweep.is_empty() {
        let sweep = eve_sweep(&B92Config { eve: None, ..config }, &p.sweep)?;
        out.file("sweep.txt", sweep.to_text());
        out.metric("sweep_monotone", sweep.monotone);
    }
    let agreement = s.eve_agreement.map_or("no eve".to_string(), |a| format!("eve agreement {a:.4}"));
    out.summary.push(format!("qkd-b92: {} sifted of {}, {agreement}", s.sifted, s.rounds));
    Ok(out)
}

pub fn readout(p: &ReadoutParams, seed: u64) -> Result<Output> {
    let rc = RecoveryConfig { n_max: p.n_max, modes: p.modes, noise: p.noise, trials: p.trials, samples: p.samples, length: p.length, dt: p.dt };
    let recovery = run_recovery(&rc, rng::derive(seed, 0))?;
    let read = ReadConfig { n: p.n, window: p.window, eps_vel: p.eps_vel, dt: p.dt, contrast: p.contrast, length: p.length };
    let app = PointerApparatus::with_resolution(p.resolution)?;
    let mut text = String::from("# s trials correct rate median_s_hat\n");
    let mut out = Output::default();
    let mut rates = Map::new();
    for &s in &p.s {
        let r = read_s_trials(s, &app, &read, p.read_trials, rng::derive(seed, 1 + s))?;
        let _ = writeln!(text, "{s} {} {} {:e} {:e}", r.trials, r.correct, r.rate, r.median_s_hat);
        rates.insert(s.to_string(), json!(r.rate));
    }
    out.file("recovery.txt", recovery.to_text());
    out.file("reading.txt", text);
    out.metric("recovery_rate", recovery.rate);
    out.metric("verdict_rate", rates);
    out.summary.push(format!("readout: {}/{} mode sets recovered exactly", recovery.exact, recovery.trials.len()));
    Ok(out)
}

pub fn gadget(p: &GadgetParams, seed: u64) -> Result<Output> {
    let oracle = Oracle::parse(p.n, &p.oracle, seed)?;
    let g = run_gadget(&oracle)?;
    let s = oracle.count();
    let size = (1u64 << p.n) as f64;
    let want = [(size - s as f64) / size, s as f64 / size];
    let norm = want[0].hypot(want[1]);
    let err = (g.alpha[0] - want[0] / norm).abs().max((g.alpha[1] - want[1] / norm).abs());
    let mut out = Output::default();
    out.file("gadget.txt", g.to_text());
    out.checks.push(Check::new("amplitudes", err < 1e-12, format!("max deviation from ((2^n - s), s)/norm = {err:e}")));
    out.checks.push(Check::new("probability_at_least_quarter", g.probability >= 0.25, format!("{}", g.probability)));
    out.checks.push(Check::new("unitary", g.norm_error < 1e-12, format!("| |register| - 1 | = {:e}", g.norm_error)));
    out.metric("s", g.implied_s);
    out.metric("count", s);
    out.metric("probability", g.probability);
    out.metric("alpha", g.alpha);
    out.summary.push(format!("gadget: s={} probability={}", g.implied_s, g.probability));
    Ok(out)
}

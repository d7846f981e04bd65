//! Recovering the quantum numbers of an equal-amplitude superposition from
//! `(x, v, t)` samples of one trajectory.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use subq_measurement::TrackedSample;
use subquantum_core::basis::{EigenBasis, ModeSuperposition, MAX_QUANTUM_NUMBER};
use subquantum_core::rng;
use subquantum_core::trajectory::{follow, AnalyticGuide, StepOptions};
use subquantum_core::{Error, Result};

/// Largest candidate count searched exhaustively.
pub const EXHAUSTIVE_LIMIT: u64 = 1_000_000;

/// Restarts of the swap search used above [`EXHAUSTIVE_LIMIT`].
pub const RESTARTS: usize = 10;

/// Residual gap, in noise floors, below which two sets are not told apart.
pub const AMBIGUITY_GAP: f64 = 10.0;

/// A measured point of the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VelocitySample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

impl From<TrackedSample> for VelocitySample {
    fn from(s: TrackedSample) -> Self {
        VelocitySample { t: s.t, x: s.x_hat, v: s.v_hat }
    }
}

/// `psi = N^{-1/2} sum_{n in S} phi_n e^{-i E_n t}` with zero phases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModeSet {
    pub n_max: u32,
    /// Sorted and distinct.
    pub set: Vec<u32>,
}

impl ModeSet {
    pub fn new(mut set: Vec<u32>, n_max: u32) -> Result<Self> {
        set.sort_unstable();
        if set.is_empty() {
            return Err(Error::param("set", "need at least one mode"));
        }
        if set.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("set", "modes must be distinct"));
        }
        if set[0] == 0 || *set.last().unwrap() > n_max || n_max > MAX_QUANTUM_NUMBER {
            return Err(Error::param("set", format!("modes must lie in 1..={n_max} with n_max <= {MAX_QUANTUM_NUMBER}")));
        }
        Ok(ModeSet { n_max, set })
    }

    /// `N` distinct modes drawn uniformly from `1..=n_max`.
    pub fn random(n: usize, n_max: u32, rng: &mut impl Rng) -> Result<Self> {
        if n == 0 || n > n_max as usize {
            return Err(Error::param("N", "need 1 <= N <= n_max"));
        }
        let set = index::sample(rng, n_max as usize, n).into_iter().map(|i| i as u32 + 1).collect();
        Self::new(set, n_max)
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn superposition(&self, basis: EigenBasis) -> Result<ModeSuperposition> {
        ModeSuperposition::well_1d(basis, &self.set, &vec![0.0; self.set.len()])
    }
}

/// Per-sample tables of `phi_n`, `phi_n'` and `e^{-i E_n t}` for
/// `n = 1..=n_max`.
struct Tables {
    phi: Vec<Vec<f64>>,
    dphi: Vec<Vec<f64>>,
    phase: Vec<Vec<Complex64>>,
    v: Vec<f64>,
}

impl Tables {
    fn new(samples: &[VelocitySample], basis: &EigenBasis, n_max: u32) -> Self {
        let modes = || 0..=n_max;
        Tables {
            phi: samples.iter().map(|s| modes().map(|n| if n == 0 { 0.0 } else { basis.phi(n, s.x) }).collect()).collect(),
            dphi: samples.iter().map(|s| modes().map(|n| if n == 0 { 0.0 } else { basis.dphi(n, s.x) }).collect()).collect(),
            phase: samples.iter().map(|s| modes().map(|n| Complex64::from_polar(1.0, -basis.energy(n) * s.t)).collect()).collect(),
            v: samples.iter().map(|s| s.v).collect(),
        }
    }

    /// `R(S) = sum_i (v_i - v_S(x_i, t_i))^2`.
    fn residual(&self, set: &[u32]) -> f64 {
        let mut r = 0.0;
        for i in 0..self.v.len() {
            let (mut psi, mut dpsi) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for &n in set {
                let z = self.phase[i][n as usize];
                psi += z * self.phi[i][n as usize];
                dpsi += z * self.dphi[i][n as usize];
            }
            let v = (psi.conj() * dpsi).im / psi.norm_sqr();
            let d = self.v[i] - v;
            r += if d.is_finite() { d * d } else { f64::INFINITY };
        }
        r
    }
}

/// `R(S)` for one candidate set.
pub fn residual(samples: &[VelocitySample], basis: EigenBasis, set: &ModeSet) -> f64 {
    Tables::new(samples, &basis, set.n_max).residual(&set.set)
}

/// `C(n, k)`, saturating.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    c as u64
}

/// Result of a mode-set search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeFit {
    pub best: ModeSet,
    pub residual: f64,
    /// Closest competitor and its residual.
    pub runner_up: Option<(Vec<u32>, f64)>,
    /// `samples * noise^2`.
    pub noise_floor: f64,
    /// Best and runner-up are within [`AMBIGUITY_GAP`] noise floors.
    pub ambiguous: bool,
    pub exhaustive: bool,
    pub candidates: u64,
    /// `N = 1`: velocities vanish for every singleton and the choice rests
    /// on the positions alone.
    pub degenerate: bool,
}

impl ModeFit {
    pub fn gap(&self) -> f64 {
        self.runner_up.as_ref().map_or(f64::INFINITY, |r| r.1 - self.residual)
    }
}

fn next_combination(c: &mut [u32], n_max: u32) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n_max - (k - 1 - i) as u32 {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Keeps the two lowest residuals seen.
#[derive(Clone)]
struct Podium {
    first: (f64, Vec<u32>),
    second: Option<(f64, Vec<u32>)>,
}

impl Podium {
    fn new(r: f64, set: Vec<u32>) -> Self {
        Podium { first: (r, set), second: None }
    }

    fn offer(&mut self, r: f64, set: &[u32]) {
        if self.first.1 == set || self.second.as_ref().is_some_and(|s| s.1 == set) {
            return;
        }
        if r < self.first.0 {
            let old = std::mem::replace(&mut self.first, (r, set.to_vec()));
            self.second = Some(old);
        } else if self.second.as_ref().is_none_or(|s| r < s.0) {
            self.second = Some((r, set.to_vec()));
        }
    }

    fn merge(mut self, other: Podium) -> Podium {
        self.offer(other.first.0, &other.first.1);
        if let Some((r, s)) = other.second {
            self.offer(r, &s);
        }
        self
    }
}

fn exhaustive(tables: &Tables, n: usize, n_max: u32) -> Podium {
    // split on the smallest member so the work parallelises
    (1..=n_max - n as u32 + 1)
        .into_par_iter()
        .map(|head| {
            let mut c: Vec<u32> = (0..n as u32).map(|i| head + i).collect();
            let mut podium = Podium::new(tables.residual(&c), c.clone());
            while next_combination(&mut c, n_max) && c[0] == head {
                podium.offer(tables.residual(&c), &c);
            }
            podium
        })
        .reduce_with(Podium::merge)
        .expect("at least one head")
}

/// Swap descent from `start`: replace one member by one non-member while
/// that lowers the residual.
fn descend(tables: &Tables, start: Vec<u32>, n_max: u32, podium: &mut Podium) {
    let mut cur = start;
    cur.sort_unstable();
    let mut r = tables.residual(&cur);
    podium.offer(r, &cur);
    loop {
        let mut best: Option<(f64, Vec<u32>)> = None;
        for i in 0..cur.len() {
            for m in 1..=n_max {
                if cur.contains(&m) {
                    continue;
                }
                let mut cand = cur.clone();
                cand[i] = m;
                cand.sort_unstable();
                let rc = tables.residual(&cand);
                podium.offer(rc, &cand);
                if rc < best.as_ref().map_or(r, |b| b.0) {
                    best = Some((rc, cand));
                }
            }
        }
        match best {
            Some((rc, cand)) => {
                r = rc;
                cur = cand;
            }
            None => return,
        }
    }
}

/// Greedy start: add the mode that most lowers the residual of the partial
/// set, one at a time.
fn greedy(tables: &Tables, n: usize, n_max: u32) -> Vec<u32> {
    let mut set: Vec<u32> = Vec::with_capacity(n);
    while set.len() < n {
        let pick = (1..=n_max)
            .filter(|m| !set.contains(m))
            .map(|m| {
                let mut c = set.clone();
                c.push(m);
                (tables.residual(&c), m)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("a free mode remains")
            .1;
        set.push(pick);
    }
    set
}

/// `argmin_{|S| = N, S in [1, n_max]} sum_i (v_i - v_S(x_i, t_i))^2`.
///
/// `noise` is the standard deviation of the velocity errors and sets the
/// floor `samples * noise^2` against which the best and runner-up residuals
/// are compared. Above [`EXHAUSTIVE_LIMIT`] candidates the search is a greedy
/// start plus random restarts, each refined by swap descent.
pub fn solve_mode_set(samples: &[VelocitySample], basis: EigenBasis, n: usize, n_max: u32, noise: f64, seed: u64) -> Result<ModeFit> {
    if n == 0 || n > n_max as usize || n_max > MAX_QUANTUM_NUMBER {
        return Err(Error::param("N", format!("need 1 <= N <= n_max <= {MAX_QUANTUM_NUMBER}")));
    }
    if samples.len() < n {
        return Err(Error::SampleTooSmall { got: samples.len(), need: n });
    }
    if !(noise >= 0.0) {
        return Err(Error::param("noise", "must be non-negative"));
    }
    let m = samples.len() as f64;
    // rounding in v itself
    let noise_floor = m * noise.max(1e-13).powi(2);
    let tables = Tables::new(samples, &basis, n_max);
    let candidates = binomial(n_max as u64, n as u64);

    if n == 1 {
        return Ok(singleton(samples, &basis, n_max, noise_floor, &tables));
    }

    let exhaustive_search = candidates <= EXHAUSTIVE_LIMIT;
    let podium = if exhaustive_search {
        exhaustive(&tables, n, n_max)
    } else {
        let start = greedy(&tables, n, n_max);
        let mut podium = Podium::new(tables.residual(&start), start.clone());
        descend(&tables, start, n_max, &mut podium);
        for k in 0..RESTARTS {
            let s = ModeSet::random(n, n_max, &mut rng::stream(seed, k as u64))?.set;
            descend(&tables, s, n_max, &mut podium);
        }
        podium
    };
    let (residual, best) = podium.first;
    let ambiguous = podium.second.as_ref().is_some_and(|s| s.0 - residual < AMBIGUITY_GAP * noise_floor);
    Ok(ModeFit {
        best: ModeSet::new(best, n_max)?,
        residual,
        runner_up: podium.second.map(|(r, s)| (s, r)),
        noise_floor,
        ambiguous,
        exhaustive: exhaustive_search,
        candidates,
        degenerate: false,
    })
}

/// Every eigenstate is stationary, so velocities cannot pick one. The
/// positions are scored by `sum_i ln |phi_n(x_i)|^2` instead.
fn singleton(samples: &[VelocitySample], basis: &EigenBasis, n_max: u32, noise_floor: f64, tables: &Tables) -> ModeFit {
    let mut scored: Vec<(f64, u32)> =
        (1..=n_max).map(|k| (samples.iter().map(|s| basis.phi(k, s.x).powi(2).ln()).sum::<f64>(), k)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let best = scored[0].1;
    let runner_up = scored.get(1).map(|&(_, k)| (vec![k], tables.residual(&[k])));
    // a likelihood ratio below 10 does not settle it
    let ambiguous = scored.get(1).is_some_and(|s| scored[0].0 - s.0 < 10f64.ln());
    ModeFit {
        best: ModeSet { n_max, set: vec![best] },
        residual: tables.residual(&[best]),
        runner_up,
        noise_floor,
        ambiguous,
        exhaustive: true,
        candidates: n_max as u64,
        degenerate: true,
    }
}

/// Sample times uniform over one period of the slowest beat the basis
/// allows, `2 pi / (E_2 - E_1)`, sorted.
pub fn sample_times(basis: &EigenBasis, count: usize, rng: &mut impl Rng) -> Vec<f64> {
    let period = 2.0 * std::f64::consts::PI / (basis.energy(2) - basis.energy(1));
    let mut t: Vec<f64> = (0..count).map(|_| period * rng.random::<f64>()).collect();
    t.sort_by(f64::total_cmp);
    t
}

/// Equilibrium draw from `|psi(x, 0)|^2` by rejection under the density bound.
pub fn equilibrium_start(field: &ModeSuperposition, rng: &mut impl Rng) -> f64 {
    let length = field.axes()[0].length();
    loop {
        let x = length * rng.random::<f64>();
        if rng.random::<f64>() * field.density_bound() < field.density(&[x], 0.0) {
            return x;
        }
    }
}

/// One hidden trajectory and the samples read off it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleRun {
    pub truth: ModeSet,
    pub x0: f64,
    pub samples: Vec<VelocitySample>,
}

impl SingleRun {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# run truth={:?} x0={}", self.truth.set, self.x0);
        s.push_str("# t x v\n");
        for p in &self.samples {
            let _ = writeln!(s, "{:e} {:e} {:e}", p.t, p.x, p.v);
        }
        s
    }
}

/// Follows one equilibrium particle guided by `truth` and records the exact
/// positions and velocities at `times`, adding normal noise of standard
/// deviation `noise` to the velocities.
pub fn synthesize_run(truth: &ModeSet, basis: EigenBasis, times: &[f64], noise: f64, dt: f64, seed: u64) -> Result<SingleRun> {
    if times.is_empty() {
        return Err(Error::param("times", "need at least one sample time"));
    }
    let field = truth.superposition(basis)?;
    let x0 = equilibrium_start(&field, &mut rng::stream(seed, 0));
    let mut guide = AnalyticGuide::new(field, 0.0);
    let t_end = times.iter().cloned().fold(0.0, f64::max);
    let path = follow(&mut guide, &[x0], t_end, &StepOptions::new(dt), times)?;
    let normal = Normal::new(0.0, noise.max(0.0)).map_err(|e| Error::param("noise", e.to_string()))?;
    let mut r = rng::stream(seed, 1);
    let samples = (0..path.len())
        .map(|i| VelocitySample { t: path.times[i], x: path.position(i)[0], v: path.velocity(i)[0] + normal.sample(&mut r) })
        .collect();
    Ok(SingleRun { truth: truth.clone(), x0, samples })
}

/// Recovery experiment: random sets and sample times per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoveryConfig {
    pub n_max: u32,
    pub modes: usize,
    pub noise: f64,
    pub trials: usize,
    /// Samples per trajectory.
    pub samples: usize,
    pub length: f64,
    pub dt: f64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig { n_max: 12, modes: 4, noise: 1e-6, trials: 100, samples: 8, length: std::f64::consts::PI, dt: 0.002 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryTrial {
    pub truth: Vec<u32>,
    pub found: Vec<u32>,
    pub x0: f64,
    pub residual: f64,
    pub gap: f64,
    pub ambiguous: bool,
}

impl RecoveryTrial {
    pub fn exact(&self) -> bool {
        self.truth == self.found && !self.ambiguous
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoverySummary {
    pub config: RecoveryConfig,
    pub trials: Vec<RecoveryTrial>,
    pub exact: usize,
    pub rate: f64,
}

impl RecoverySummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# recovery trials={} exact={} rate={}", self.trials.len(), self.exact, self.rate);
        s.push_str("# trial truth found x0 residual gap ambiguous\n");
        let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        for (i, t) in self.trials.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {} {:e} {:e} {:e} {}", join(&t.truth), join(&t.found), t.x0, t.residual, t.gap, u8::from(t.ambiguous));
        }
        s
    }
}

pub fn run_recovery(config: &RecoveryConfig, seed: u64) -> Result<RecoverySummary> {
    let basis = EigenBasis::well(config.length)?;
    if config.samples < config.modes {
        return Err(Error::SampleTooSmall { got: config.samples, need: config.modes });
    }
    let trials: Vec<RecoveryTrial> = (0..config.trials)
        .map(|i| {
            let s = rng::derive(seed, i as u64);
            let truth = ModeSet::random(config.modes, config.n_max, &mut rng::stream(s, 0))?;
            let times = sample_times(&basis, config.samples, &mut rng::stream(s, 1));
            let run = synthesize_run(&truth, basis, &times, config.noise, config.dt, rng::derive(s, 2))?;
            let fit = solve_mode_set(&run.samples, basis, config.modes, config.n_max, config.noise, rng::derive(s, 3))?;
            Ok(RecoveryTrial { truth: truth.set, found: fit.best.set.clone(), x0: run.x0, residual: fit.residual, gap: fit.gap(), ambiguous: fit.ambiguous })
        })
        .collect::<Result<_>>()?;
    let exact = trials.iter().filter(|t| t.exact()).count();
    Ok(RecoverySummary { config: *config, rate: exact as f64 / trials.len().max(1) as f64, exact, trials })
}

//! Trajectory integration along pilot-wave guidance.
//!
//! Particles are advanced by classical fourth-order Runge-Kutta. A step is
//! split in half (recursively, up to a depth limit) when the displacement
//! `|v| h` exceeds the field's spacing or when the four stage velocities
//! disagree by more than the stage tolerance, which is what happens when a
//! trajectory passes close to a node.
//!
//! Ensembles move in lockstep: a [`Guide`] supplies the field valid over
//! each base step, and every particle is advanced independently against it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{GuidanceField, NodeClamp, PointerCouplingField};
use crate::potential::Potential;
use crate::propagate::Propagator;
use crate::spectral::Spectral;
use crate::velocity::{GridSnapshot, SnapshotPair};
use crate::wavefunction::Wavefunction;

impl<T: GuidanceField> GuidanceField for &T {
    type Slice = T::Slice;

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn slice(&self, t: f64) -> T::Slice {
        (**self).slice(t)
    }

    #[inline]
    fn velocity(&self, s: &T::Slice, x: &[f64], v: &mut [f64]) -> f64 {
        (**self).velocity(s, x, v)
    }

    fn contains(&self, x: &[f64]) -> bool {
        (**self).contains(x)
    }

    fn confine(&self, x: &mut [f64]) -> bool {
        (**self).confine(x)
    }

    fn spacing(&self) -> f64 {
        (**self).spacing()
    }

    fn span(&self) -> f64 {
        (**self).span()
    }
}

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// Base step.
    pub dt: f64,
    /// Deepest recursive halving; steps at this depth are accepted as is.
    pub max_halvings: u32,
    /// Largest number of elementary steps per particle over a run, on
    /// average; exceeding it aborts with a step-budget error.
    pub step_budget: usize,
    /// Largest accepted `h max_ij |k_i - k_j|`, in units of the spacing.
    pub stage_tolerance: f64,
    /// Node cap; `None` derives it from the field span and `dt`.
    pub clamp: Option<NodeClamp>,
}

impl StepOptions {
    pub fn new(dt: f64) -> Self {
        StepOptions { dt, max_halvings: 10, step_budget: 10_000_000, stage_tolerance: 0.05, clamp: None }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.stage_tolerance > 0.0) {
            return Err(Error::param("stage_tolerance", "must be positive"));
        }
        Ok(())
    }
}

/// Counters accumulated over a transport run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct StepStats {
    pub steps: u64,
    pub halvings: u64,
    /// Steps accepted at the maximal halving depth.
    pub forced: u64,
    /// Velocity evaluations where the node cap was applied.
    pub clamped: u64,
}

impl StepStats {
    fn add(mut self, o: StepStats) -> StepStats {
        self.steps += o.steps;
        self.halvings += o.halvings;
        self.forced += o.forced;
        self.clamped += o.clamped;
        self
    }
}

struct Stepper<'f, F: GuidanceField> {
    field: &'f F,
    clamp: NodeClamp,
    spacing: f64,
    tol: f64,
    max_depth: u32,
    stats: StepStats,
}

impl<F: GuidanceField> Stepper<'_, F> {
    #[inline]
    fn eval(&mut self, s: &F::Slice, x: &[f64], v: &mut [f64]) {
        let rel = self.field.velocity(s, x, v);
        if self.clamp.apply(rel, v) {
            self.stats.clamped += 1;
        }
    }

    /// One RK4 step from `(t, x)`; `slices` are at `t`, `t + h/2`, `t + h`
    /// and `k0`, when given, is the velocity at `(t, x)`.
    fn step(&mut self, t: f64, h: f64, x: &mut [f64], slices: [&F::Slice; 3], k0: Option<[f64; 2]>, depth: u32) -> Result<()> {
        let dim = x.len();
        let mut k = [[0.0f64; 2]; 4];
        let mut y = [0.0f64; 2];
        match k0 {
            Some(v) => k[0] = v,
            None => self.eval(slices[0], x, &mut k[0][..dim]),
        }
        let speed = k[0][..dim].iter().map(|c| c * c).sum::<f64>().sqrt();
        let can_split = depth < self.max_depth;
        if speed * h > self.spacing && can_split {
            return self.split(t, h, x, slices, k[0], depth);
        }
        for d in 0..dim {
            y[d] = x[d] + 0.5 * h * k[0][d];
        }
        self.eval(slices[1], &y[..dim], &mut k[1][..dim]);
        for d in 0..dim {
            y[d] = x[d] + 0.5 * h * k[1][d];
        }
        self.eval(slices[1], &y[..dim], &mut k[2][..dim]);
        for d in 0..dim {
            y[d] = x[d] + h * k[2][d];
        }
        self.eval(slices[2], &y[..dim], &mut k[3][..dim]);
        if can_split {
            let mut spread = 0.0f64;
            for a in 0..4 {
                for b in a + 1..4 {
                    let d2: f64 = (0..dim).map(|d| (k[a][d] - k[b][d]).powi(2)).sum();
                    spread = spread.max(d2);
                }
            }
            if h * spread.sqrt() > self.tol {
                return self.split(t, h, x, slices, k[0], depth);
            }
        } else {
            self.stats.forced += 1;
        }
        for d in 0..dim {
            x[d] += h / 6.0 * (k[0][d] + 2.0 * k[1][d] + 2.0 * k[2][d] + k[3][d]);
        }
        self.stats.steps += 1;
        if !self.field.confine(x) {
            return Err(Error::TrajectoryExited { time: t + h, position: x.to_vec() });
        }
        Ok(())
    }

    /// Two half steps, reusing the parent's slices at the ends and middle.
    fn split(&mut self, t: f64, h: f64, x: &mut [f64], slices: [&F::Slice; 3], k0: [f64; 2], depth: u32) -> Result<()> {
        self.stats.halvings += 1;
        let g = 0.5 * h;
        let q1 = self.field.slice(t + 0.5 * g);
        let q3 = self.field.slice(t + 1.5 * g);
        self.step(t, g, x, [slices[0], &q1, slices[1]], Some(k0), depth + 1)?;
        self.step(t + g, g, x, [slices[1], &q3, slices[2]], None, depth + 1)
    }
}

/// Advances every point (flat, `dim` coordinates each) from `t` to `t + h`
/// through `field`. Returns the merged counters; on failure the error of the
/// lowest-indexed failing particle.
pub fn advance_points<F: GuidanceField>(field: &F, points: &mut [f64], t: f64, h: f64, opts: &StepOptions) -> Result<StepStats> {
    opts.validate()?;
    let dim = field.dim();
    let clamp = opts.clamp.unwrap_or_else(|| NodeClamp::for_step(field.span(), opts.dt));
    let slices = [field.slice(t), field.slice(t + 0.5 * h), field.slice(t + h)];
    let spacing = field.spacing();
    let run = |p: &mut [f64]| {
        let mut st = Stepper {
            field,
            clamp,
            spacing,
            tol: opts.stage_tolerance * spacing,
            max_depth: opts.max_halvings,
            stats: StepStats::default(),
        };
        let r = st.step(t, h, p, [&slices[0], &slices[1], &slices[2]], None, 0);
        (r, st.stats)
    };
    let (stats, err) = points
        .par_chunks_mut(dim)
        .enumerate()
        .map(|(i, p)| {
            let (r, s) = run(p);
            (s, r.err().map(|e| (i, e)))
        })
        .reduce(
            || (StepStats::default(), None),
            |(sa, ea), (sb, eb)| {
                let e = match (ea, eb) {
                    (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
                    (a, b) => a.or(b),
                };
                (sa.add(sb), e)
            },
        );
    match err {
        Some((_, e)) => Err(e),
        None => Ok(stats),
    }
}

/// Velocities of all points at time `t` (node cap applied).
pub fn velocities<F: GuidanceField>(field: &F, points: &[f64], t: f64, clamp: NodeClamp) -> Vec<f64> {
    let dim = field.dim();
    let s = field.slice(t);
    let mut out = vec![0.0; points.len()];
    out.par_chunks_mut(dim).zip(points.par_chunks(dim)).for_each(|(v, x)| {
        let rel = field.velocity(&s, x, v);
        clamp.apply(rel, v);
    });
    out
}

/// Source of the guidance field over successive time intervals.
pub trait Guide {
    type Field<'a>: GuidanceField
    where
        Self: 'a;

    fn dim(&self) -> usize;

    fn time(&self) -> f64;

    /// Moves the guide to `t_next` and returns the field valid on
    /// `[time, t_next]`.
    fn step(&mut self, t_next: f64) -> Result<Self::Field<'_>>;

    /// Field at the current time.
    fn current(&self) -> Self::Field<'_>;
}

/// A guide whose field is known in closed form at every time.
pub struct AnalyticGuide<F> {
    field: F,
    time: f64,
}

impl<F: GuidanceField> AnalyticGuide<F> {
    pub fn new(field: F, t0: f64) -> Self {
        AnalyticGuide { field, time: t0 }
    }

    pub fn field(&self) -> &F {
        &self.field
    }
}

impl<F: GuidanceField> Guide for AnalyticGuide<F> {
    type Field<'a>
        = &'a F
    where
        F: 'a;

    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn time(&self) -> f64 {
        self.time
    }

    fn step(&mut self, t_next: f64) -> Result<&F> {
        self.time = t_next;
        Ok(&self.field)
    }

    fn current(&self) -> &F {
        &self.field
    }
}

/// A gridded wavefunction co-propagated with the particles. A snapshot of
/// `psi` and its gradient is kept at both ends of the current step and the
/// guidance is interpolated linearly in time between them.
pub struct PropagatedGuide {
    propagator: Propagator,
    spectral: Spectral,
    psi: Wavefunction,
    dt_max: f64,
    prev: GridSnapshot,
    cur: GridSnapshot,
}

impl PropagatedGuide {
    /// `dt_max` bounds the split-operator step used between snapshots.
    pub fn new(psi: Wavefunction, potential: &Potential, dt_max: f64) -> Result<Self> {
        psi.check_normalized()?;
        if !potential.is_kinetic() {
            return Err(Error::param("potential", "pointer coupling guidance is analytic; use PointerCouplingField"));
        }
        if !(dt_max > 0.0) {
            return Err(Error::param("dt_max", "must be positive"));
        }
        let propagator = Propagator::new(psi.grid(), potential)?;
        let spectral = Spectral::new(psi.grid());
        let snap = GridSnapshot::with_spectral(&psi, &spectral);
        Ok(PropagatedGuide { propagator, spectral, psi, dt_max, prev: snap.clone(), cur: snap })
    }

    pub fn wavefunction(&self) -> &Wavefunction {
        &self.psi
    }

    /// Applies an impulsive phase `exp(-i phase(x))` at the current time.
    pub fn kick(&mut self, phase: impl Fn(&[f64]) -> f64) {
        Propagator::imprint_phase(&mut self.psi, phase);
        self.cur = GridSnapshot::with_spectral(&self.psi, &self.spectral);
        self.prev = self.cur.clone();
    }
}

impl Guide for PropagatedGuide {
    type Field<'a> = SnapshotPair<'a>;

    fn dim(&self) -> usize {
        self.psi.grid().dim()
    }

    fn time(&self) -> f64 {
        self.psi.time()
    }

    fn step(&mut self, t_next: f64) -> Result<SnapshotPair<'_>> {
        self.propagator.advance_to(&mut self.psi, t_next, self.dt_max)?;
        let next = GridSnapshot::with_spectral(&self.psi, &self.spectral);
        self.prev = std::mem::replace(&mut self.cur, next);
        Ok(SnapshotPair::new(&self.prev, &self.cur))
    }

    fn current(&self) -> SnapshotPair<'_> {
        SnapshotPair::new(&self.cur, &self.cur)
    }
}

/// Drives `points` from the guide's time to `t_end` in base steps of
/// `opts.dt`, landing exactly on every sample time. `on_sample` receives the
/// time, positions and capped velocities at each sample time (including the
/// start time if listed).
pub fn evolve<G: Guide>(
    guide: &mut G,
    points: &mut [f64],
    t_end: f64,
    opts: &StepOptions,
    sample_times: &[f64],
    mut on_sample: impl FnMut(f64, &[f64], &[f64]) -> Result<()>,
) -> Result<StepStats> {
    opts.validate()?;
    let dim = guide.dim();
    if points.len() % dim != 0 {
        return Err(Error::param("points", "length must be a multiple of the dimension"));
    }
    let t0 = guide.time();
    if t_end < t0 {
        return Err(Error::param("t_end", "must not precede the guide time"));
    }
    if sample_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("sample_times", "must be strictly increasing"));
    }
    if sample_times.iter().any(|&s| s < t0 || s > t_end) {
        return Err(Error::param("sample_times", "must lie within the run"));
    }
    let clamp_for = |g: &G| {
        let f = g.current();
        opts.clamp.unwrap_or_else(|| NodeClamp::for_step(f.span(), opts.dt))
    };
    let clamp = clamp_for(guide);
    let mut next_sample = 0;
    let mut stats = StepStats::default();
    let mut t = t0;
    let tiny = 1e-12 * opts.dt.max(t_end.abs());
    while next_sample < sample_times.len() && sample_times[next_sample] <= t + tiny {
        let v = velocities(&guide.current(), points, t, clamp);
        on_sample(t, points, &v)?;
        next_sample += 1;
    }
    while t < t_end - tiny {
        let k = ((t - t0) / opts.dt + 1e-9).floor() + 1.0;
        let mut target = (t0 + k * opts.dt).min(t_end);
        if let Some(&s) = sample_times.get(next_sample) {
            target = target.min(s);
        }
        if target - t <= tiny {
            target = (t0 + (k + 1.0) * opts.dt).min(t_end);
        }
        let field = guide.step(target)?;
        let s = advance_points(&field, points, t, target - t, opts)?;
        drop(field);
        stats = stats.add(s);
        t = target;
        let n = (points.len() / dim).max(1) as u64;
        if stats.steps > opts.step_budget as u64 * n {
            return Err(Error::StepBudget { budget: opts.step_budget, time: t });
        }
        while next_sample < sample_times.len() && sample_times[next_sample] <= t + tiny {
            let v = velocities(&guide.current(), points, t, clamp);
            on_sample(sample_times[next_sample], points, &v)?;
            next_sample += 1;
        }
    }
    Ok(stats)
}

/// A recorded path `(t_i, x_i, v_i)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub dim: usize,
    pub times: Vec<f64>,
    /// Flat, `dim` coordinates per time.
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.velocities[i * self.dim..(i + 1) * self.dim]
    }

    fn recorder(&mut self) -> impl FnMut(f64, &[f64], &[f64]) -> Result<()> + '_ {
        |t, x, v| {
            self.times.push(t);
            self.positions.extend_from_slice(x);
            self.velocities.extend_from_slice(v);
            Ok(())
        }
    }
}

/// Follows one particle from `x0` through any guide.
pub fn follow<G: Guide>(guide: &mut G, x0: &[f64], t_end: f64, opts: &StepOptions, sample_times: &[f64]) -> Result<Trajectory> {
    let dim = guide.dim();
    if x0.len() != dim {
        return Err(Error::param("x0", format!("expected {dim} coordinates")));
    }
    if !guide.current().contains(x0) {
        return Err(Error::param("x0", "outside the grid"));
    }
    let mut traj = Trajectory { dim, ..Default::default() };
    let mut x = x0.to_vec();
    let stats = evolve(guide, &mut x, t_end, opts, sample_times, traj.recorder())?;
    traj.stats = stats;
    Ok(traj)
}

/// Integrates the trajectory from `x0` under the wavefunction `psi0`
/// evolving in `potential`, recording every base step `dt` (and the start).
pub fn integrate_trajectory(psi0: &Wavefunction, potential: &Potential, x0: &[f64], t_final: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    let t0 = psi0.time();
    let steps = ((t_final - t0) / dt).round().max(0.0) as usize;
    let mut samples: Vec<f64> = (0..=steps).map(|i| t0 + i as f64 * dt).collect();
    if let Some(last) = samples.last_mut() {
        *last = last.min(t_final).max(t0);
    }
    if t_final > *samples.last().unwrap_or(&t0) + 1e-12 {
        samples.push(t_final);
    }
    samples.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let opts = StepOptions::new(dt);
    match potential {
        Potential::PointerCoupling { coupling } => {
            psi0.check_normalized()?;
            potential.validate(psi0.grid())?;
            let g = psi0.grid();
            let bounds = [g.axis(0).interior(), g.axis(1).interior()];
            let field = PointerCouplingField { coupling: *coupling, bounds, spacing: g.min_spacing() };
            follow(&mut AnalyticGuide::new(field, t0), x0, t_final, &opts, &samples)
        }
        _ => {
            let mut guide = PropagatedGuide::new(psi0.clone(), potential, dt)?;
            follow(&mut guide, x0, t_final, &opts, &samples)
        }
    }
}

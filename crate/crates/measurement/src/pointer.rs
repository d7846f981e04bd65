//! Single pointer measurements in the exact model: `x' = 0`, `y' = a x`,
//! so `y(t) = y0 + a x0 t` and `P(x, y, t) = |psi0(x)|^2 pi0(y - a x t)`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use subquantum_core::ensembles::coarse::gauss_legendre;
use subquantum_core::ensembles::TabulatedDensity;
use subquantum_core::field::PointerCouplingField;
use subquantum_core::rng;
use subquantum_core::trajectory::{evolve, AnalyticGuide, StepOptions};
use subquantum_core::wavefunction::Wavefunction;
use subquantum_core::{Error, Result};

use crate::apparatus::PointerApparatus;

/// One pointer reading and what it implies about the system position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementRecord {
    /// The hidden system position; for oracles only.
    pub x0: f64,
    /// The hidden initial pointer position.
    pub pointer_start: f64,
    /// Pointer reading `y = y0 + a x0 t`.
    pub reading: f64,
    /// `(y/at - w/2at, y/at + w/2at)`, widened by a few ulps so rounding
    /// cannot exclude `x0`.
    pub interval: (f64, f64),
    /// Interval midpoint `y / at`.
    pub estimate: f64,
}

impl MeasurementRecord {
    pub fn contains_x0(&self) -> bool {
        self.interval.0 <= self.x0 && self.x0 <= self.interval.1
    }

    /// The record of a pointer that started at `y0` reading a system at
    /// `x0`.
    pub fn new(app: &PointerApparatus, x0: f64, y0: f64) -> Self {
        assemble(app, x0, y0)
    }
}

fn assemble(app: &PointerApparatus, x0: f64, y0: f64) -> MeasurementRecord {
    let at = app.strength();
    let reading = y0 + app.coupling * x0 * app.duration;
    let estimate = reading / at;
    let half = app.resolution();
    let slack = 8.0 * f64::EPSILON * (estimate.abs() + half + (reading.abs() + 0.5 * app.width) / at);
    MeasurementRecord { x0, pointer_start: y0, reading, interval: (estimate - half - slack, estimate + half + slack), estimate }
}

/// A measurement together with its effect on the quantum state.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub record: MeasurementRecord,
    /// The normalized conditional system state `psi0(x) g0(y - a x t)`.
    pub conditional: Wavefunction,
    /// `|<psi_cond|psi0>|`.
    pub overlap: f64,
}

/// Measures the position of a system in state `psi0` whose hidden position
/// is `x0`.
pub fn measure_position(psi0: &Wavefunction, x0: f64, app: &PointerApparatus, seed: u64) -> Result<Measurement> {
    app.validate()?;
    if psi0.grid().dim() != 1 {
        return Err(Error::GridMismatch("the measured system is one-dimensional".into()));
    }
    if !psi0.grid().contains(&[x0]) {
        return Err(Error::param("x0", "outside the system grid"));
    }
    let mut r = rng::stream(seed, 0);
    let record = assemble(app, x0, app.draw_start(&mut r));
    let at = app.strength();
    let xs = psi0.grid().axis(0).points();
    let amps: Vec<Complex64> =
        psi0.amplitudes().iter().zip(&xs).map(|(a, &x)| a * app.amplitude(record.reading - at * x)).collect();
    let mut conditional = Wavefunction::new(psi0.grid().clone(), amps, psi0.time())?;
    if !(conditional.norm() > 0.0) {
        return Err(Error::param("reading", "conditional state vanishes on the grid"));
    }
    conditional.normalize()?;
    let overlap = conditional.inner(psi0)?.norm();
    Ok(Measurement { record, conditional, overlap })
}

/// Born-averaged fidelity `E_y |<psi_cond|psi0>|^2`, which for a Gaussian
/// `g0` is `sum_ij rho_i rho_j exp(-(at)^2 (x_i - x_j)^2 / (8 delta^2))`.
pub fn mean_fidelity(psi0: &Wavefunction, app: &PointerApparatus) -> Result<f64> {
    app.validate()?;
    if psi0.grid().dim() != 1 {
        return Err(Error::GridMismatch("the measured system is one-dimensional".into()));
    }
    let xs = psi0.grid().axis(0).points();
    let rho = psi0.density();
    let keep: Vec<(f64, f64)> = xs.iter().zip(&rho).filter(|(_, &r)| r > 0.0).map(|(&x, &r)| (x, r)).collect();
    let c = (app.strength() / app.delta).powi(2) / 8.0;
    let total: f64 = keep.iter().map(|p| p.1).sum();
    let s: f64 = keep
        .par_iter()
        .map(|&(xi, ri)| ri * keep.iter().map(|&(xj, rj)| rj * (-c * (xi - xj) * (xi - xj)).exp()).sum::<f64>())
        .sum();
    Ok(s / (total * total))
}

/// `n` hidden positions from `|psi0|^2`, each with a pointer start, drawn
/// in fixed blocks so the result does not depend on the thread count.
fn draw_pairs(born: &TabulatedDensity, app: &PointerApparatus, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let blocks = n.div_ceil(rng::BLOCK);
    (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut r = rng::stream(seed, b as u64);
            let len = rng::BLOCK.min(n - b * rng::BLOCK);
            (0..len)
                .map(|_| {
                    let mut x = [0.0];
                    born.sample_into(&mut r, &mut x);
                    (x[0], app.draw_start(&mut r))
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// `n` records with `x0 ~ |psi0|^2` and independent pointers.
pub fn measure_many(psi0: &Wavefunction, app: &PointerApparatus, n: usize, seed: u64) -> Result<Vec<MeasurementRecord>> {
    app.validate()?;
    if psi0.grid().dim() != 1 {
        return Err(Error::GridMismatch("the measured system is one-dimensional".into()));
    }
    let born = TabulatedDensity::born(psi0)?;
    Ok(draw_pairs(&born, app, n, seed).into_iter().map(|(x, y)| assemble(app, x, y)).collect())
}

/// Columnar text for a set of records.
pub fn records_to_text(records: &[MeasurementRecord]) -> String {
    let mut s = String::with_capacity(records.len() * 96);
    s.push_str("# x0 pointer_start reading lo hi estimate\n");
    for r in records {
        let _ = writeln!(s, "{:e} {:e} {:e} {:e} {:e} {:e}", r.x0, r.pointer_start, r.reading, r.interval.0, r.interval.1, r.estimate);
    }
    s
}

fn moments(born: &TabulatedDensity) -> (f64, f64) {
    let a = born.axes()[0];
    let v = born.values();
    let m0: f64 = v.iter().sum();
    let m1: f64 = v.iter().enumerate().map(|(j, &p)| p * a.node(j)).sum::<f64>() / m0;
    let m2: f64 = v.iter().enumerate().map(|(j, &p)| p * (a.node(j) - m1).powi(2)).sum::<f64>() / m0;
    (m1, m2)
}

/// `int_lo^hi rho(x) g(x) dx` for the piecewise-linear `rho`, splitting at
/// its nodes and at the extra breakpoints `kinks`.
fn weighted_mass(born: &TabulatedDensity, lo: f64, hi: f64, kinks: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    let a = born.axes()[0];
    let mut cuts = vec![lo, hi];
    let j0 = ((lo - a.lo) / a.h).ceil().max(0.0) as usize;
    let mut j = j0;
    while j < a.nodes && a.node(j) < hi {
        if a.node(j) > lo {
            cuts.push(a.node(j));
        }
        j += 1;
    }
    cuts.extend(kinks.iter().copied().filter(|&k| k > lo && k < hi));
    cuts.sort_by(f64::total_cmp);
    let (xs, ws) = gauss_legendre(6);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (c, r) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        if r <= 0.0 {
            continue;
        }
        for (xi, wi) in xs.iter().zip(&ws) {
            let x = c + r * xi;
            total += wi * r * born.at(&[x]) * g(x);
        }
    }
    total
}

/// Histogram of inferred midpoints against `|psi0|^2` convolved with the
/// scaled pointer distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmearingCheck {
    pub records: usize,
    pub lo: f64,
    pub hi: f64,
    pub observed: Vec<u64>,
    /// Expected bin probabilities by quadrature.
    pub expected: Vec<f64>,
    pub total_variation: f64,
}

pub fn smearing_check(psi0: &Wavefunction, app: &PointerApparatus, n: usize, bins: usize, seed: u64) -> Result<SmearingCheck> {
    if bins == 0 || n == 0 {
        return Err(Error::param("bins", "need records and at least one bin"));
    }
    let records = measure_many(psi0, app, n, seed)?;
    let born = TabulatedDensity::born(psi0)?;
    let (m, v) = moments(&born);
    let at = app.strength();
    let reach = app.start_reach() / at;
    let spread = (v + reach * reach).sqrt();
    let (lo, hi) = (m - 6.0 * spread, m + 6.0 * spread);
    let h = (hi - lo) / bins as f64;
    let mut observed = vec![0u64; bins];
    let mut outside = 0u64;
    for r in &records {
        let u = (r.estimate - lo) / h;
        if u >= 0.0 && u < bins as f64 {
            observed[u as usize] += 1;
        } else {
            outside += 1;
        }
    }
    let a = born.axes()[0];
    let expected: Vec<f64> = (0..bins)
        .into_par_iter()
        .map(|k| {
            let (b0, b1) = (lo + k as f64 * h, lo + (k + 1) as f64 * h);
            let kinks = match app.shape {
                crate::PointerShape::Uniform => vec![b0 - reach, b0 + reach, b1 - reach, b1 + reach],
                crate::PointerShape::Equilibrium => vec![],
            };
            weighted_mass(&born, a.lo, a.hi(), &kinks, |x| app.start_cdf(at * (b1 - x)) - app.start_cdf(at * (b0 - x)))
        })
        .collect();
    let mass: f64 = (0..a.segments()).map(|j| 0.5 * a.h * (born.values()[j] + born.values()[j + 1])).sum();
    let expected: Vec<f64> = expected.iter().map(|e| e / mass).collect();
    let inside: f64 = expected.iter().sum();
    let nf = n as f64;
    let tv = 0.5
        * (observed.iter().zip(&expected).map(|(&o, &e)| (o as f64 / nf - e).abs()).sum::<f64>()
            + (outside as f64 / nf - (1.0 - inside)).abs());
    Ok(SmearingCheck { records: n, lo, hi, observed, expected, total_variation: tv })
}

/// Cells of the simulated joint histogram against the closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointCheck {
    pub particles: usize,
    pub time: f64,
    pub cells: [usize; 2],
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Counts, row-major in `x`.
    pub observed: Vec<u64>,
    /// Closed-form cell probabilities.
    pub expected: Vec<f64>,
    /// Cells with expected count at least `MIN_EXPECTED`.
    pub active_cells: usize,
    /// Remaining cells, merged into one pooled bin.
    pub pooled_cells: usize,
    pub pooled_z: f64,
    /// Largest `|z|` over active cells and the pooled bin.
    pub max_z: f64,
    pub exceed_3: usize,
    pub exceed_4: usize,
    /// Particles in cells of zero closed-form probability.
    pub forbidden_hits: u64,
    /// `max |observed / n - expected|` over cells.
    pub sup_distance: f64,
}

impl JointCheck {
    /// Expected count below which a cell joins the pooled bin.
    pub const MIN_EXPECTED: f64 = 5.0;

    /// Binomial `z` of one cell.
    pub fn z(&self, cell: usize) -> f64 {
        binomial_z(self.observed[cell] as f64, self.expected[cell], self.particles as f64)
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.forbidden_hits == 0 && self.max_z < sigmas
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# joint n={} t={} cells={}x{}", self.particles, self.time, self.cells[0], self.cells[1]);
        s.push_str("# ix iy x y observed expected z\n");
        let hx = (self.x_range.1 - self.x_range.0) / self.cells[0] as f64;
        let hy = (self.y_range.1 - self.y_range.0) / self.cells[1] as f64;
        for i in 0..self.cells[0] {
            for j in 0..self.cells[1] {
                let c = i * self.cells[1] + j;
                let x = self.x_range.0 + (i as f64 + 0.5) * hx;
                let y = self.y_range.0 + (j as f64 + 0.5) * hy;
                let _ = writeln!(s, "{i} {j} {x:e} {y:e} {} {:e} {:e}", self.observed[c], self.expected[c] * self.particles as f64, self.z(c));
            }
        }
        s
    }
}

fn binomial_z(obs: f64, p: f64, n: f64) -> f64 {
    let var = n * p * (1.0 - p);
    if var > 0.0 {
        (obs - n * p) / var.sqrt()
    } else if obs == n * p {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Transports `n` particles of `|psi0|^2 pi0` through the pointer guidance
/// to time `t` and histograms them on `cells` against
/// `|psi0(x)|^2 pi0(y - a x t)`.
pub fn joint_density_check(psi0: &Wavefunction, app: &PointerApparatus, t: f64, n: usize, cells: [usize; 2], seed: u64) -> Result<JointCheck> {
    app.validate()?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param("t", "must be finite and non-negative"));
    }
    if cells.contains(&0) || n == 0 {
        return Err(Error::param("cells", "need particles and cells on both axes"));
    }
    if psi0.grid().dim() != 1 {
        return Err(Error::GridMismatch("the measured system is one-dimensional".into()));
    }
    let born = TabulatedDensity::born(psi0)?;
    let a = born.axes()[0];
    let (m, v) = moments(&born);
    let sd = v.sqrt();
    let x_range = ((m - 6.0 * sd).max(a.lo), (m + 6.0 * sd).min(a.hi()));
    let shift = app.coupling * t;
    let reach = app.start_reach();
    let (s0, s1) = (shift * x_range.0, shift * x_range.1);
    let y_range = (s0.min(s1) - reach, s0.max(s1) + reach);

    let pairs = draw_pairs(&born, app, n, seed);
    let mut points: Vec<f64> = pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
    if t > 0.0 {
        let pad = (x_range.1 - x_range.0) + (y_range.1 - y_range.0);
        let field = PointerCouplingField {
            coupling: app.coupling,
            bounds: [(a.lo - pad, a.hi() + pad), (y_range.0 - pad, y_range.1 + pad)],
            spacing: (y_range.1 - y_range.0) / cells[1] as f64,
        };
        let mut guide = AnalyticGuide::new(field, 0.0);
        evolve(&mut guide, &mut points, t, &StepOptions::new(0.25 * t), &[], |_, _, _| Ok(()))?;
    }

    let hx = (x_range.1 - x_range.0) / cells[0] as f64;
    let hy = (y_range.1 - y_range.0) / cells[1] as f64;
    let mut observed = vec![0u64; cells[0] * cells[1]];
    for p in points.chunks_exact(2) {
        let (u, w) = ((p[0] - x_range.0) / hx, (p[1] - y_range.0) / hy);
        if u >= 0.0 && w >= 0.0 && u < cells[0] as f64 && w < cells[1] as f64 {
            observed[u as usize * cells[1] + w as usize] += 1;
        }
    }

    let mass: f64 = (0..a.segments()).map(|j| 0.5 * a.h * (born.values()[j] + born.values()[j + 1])).sum();
    let expected: Vec<f64> = (0..cells[0] * cells[1])
        .into_par_iter()
        .map(|c| {
            let (i, j) = (c / cells[1], c % cells[1]);
            let (x0, x1) = (x_range.0 + i as f64 * hx, x_range.0 + (i + 1) as f64 * hx);
            let (y0, y1) = (y_range.0 + j as f64 * hy, y_range.0 + (j + 1) as f64 * hy);
            let mut kinks = Vec::new();
            if shift != 0.0 && app.shape == crate::PointerShape::Uniform {
                for y in [y0, y1] {
                    for e in [-reach, reach] {
                        kinks.push((y - e) / shift);
                    }
                }
            }
            let g = |x: f64| app.start_cdf(y1 - shift * x) - app.start_cdf(y0 - shift * x);
            weighted_mass(&born, x0, x1, &kinks, g) / mass
        })
        .collect();

    let nf = n as f64;
    let (mut active, mut pooled) = (0usize, 0usize);
    let (mut pool_o, mut pool_p) = (0.0, 0.0);
    let (mut max_z, mut exceed_3, mut exceed_4) = (0.0f64, 0usize, 0usize);
    let mut forbidden = 0u64;
    let mut sup = 0.0f64;
    for (&o, &p) in observed.iter().zip(&expected) {
        sup = sup.max((o as f64 / nf - p).abs());
        if p <= 0.0 {
            forbidden += o;
        }
        if nf * p >= JointCheck::MIN_EXPECTED {
            active += 1;
            let z = binomial_z(o as f64, p, nf).abs();
            max_z = max_z.max(z);
            exceed_3 += (z > 3.0) as usize;
            exceed_4 += (z > 4.0) as usize;
        } else {
            pooled += 1;
            pool_o += o as f64;
            pool_p += p;
        }
    }
    let pooled_z = if pooled > 0 { binomial_z(pool_o, pool_p, nf).abs() } else { 0.0 };
    max_z = max_z.max(pooled_z);
    Ok(JointCheck {
        particles: n,
        time: t,
        cells,
        x_range,
        y_range,
        observed,
        expected,
        active_cells: active,
        pooled_cells: pooled,
        pooled_z,
        max_z,
        exceed_3,
        exceed_4,
        forbidden_hits: forbidden,
        sup_distance: sup,
    })
}

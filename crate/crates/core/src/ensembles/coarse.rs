//! Coarse-graining cells, histograms and the coarse-grained H-function.

use serde::Serialize;

use super::density::TabulatedDensity;
use super::Ensemble;
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};

/// Smallest ensemble accepted by the statistical operations.
pub const MIN_PARTICLES: usize = 1000;

/// Uniform cells over a box, row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoarseGraining {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub cells: Vec<usize>,
}

impl CoarseGraining {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, cells: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != cells.len() || lo.is_empty() || lo.len() > 2 {
            return Err(Error::param("cells", "one bound pair and cell count per axis"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(b > a)) || cells.iter().any(|&c| c == 0) {
            return Err(Error::param("cells", "need lo < hi and at least one cell per axis"));
        }
        Ok(CoarseGraining { lo, hi, cells })
    }

    /// Cells tiling a simulation grid; each axis count must divide the grid
    /// points and every cell must hold at least four grid points.
    pub fn for_grid(grid: &Grid, cells: &[usize]) -> Result<Self> {
        if cells.len() != grid.dim() {
            return Err(Error::param("cells", "one count per grid axis"));
        }
        let mut per_cell = 1;
        for (a, &c) in grid.axes().iter().zip(cells) {
            if c == 0 || a.n % c != 0 {
                return Err(Error::param("cells", format!("{c} cells do not tile {} grid points", a.n)));
            }
            per_cell *= a.n / c;
        }
        if per_cell < 4 {
            return Err(Error::param("cells", "each cell must contain at least 4 grid points"));
        }
        let lo = grid.axes().iter().map(|a| a.lo).collect();
        let hi = grid
            .axes()
            .iter()
            .map(|a| match a.boundary {
                Boundary::Dirichlet | Boundary::Periodic => a.hi,
            })
            .collect();
        Self::new(lo, hi, cells.to_vec())
    }

    /// A near-square split of `total` cells over the grid's axes (8 x 4 for
    /// 32 in two dimensions).
    pub fn with_total(grid: &Grid, total: usize) -> Result<Self> {
        let cells = split_total(total, grid.dim())?;
        Self::for_grid(grid, &cells)
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self, d: usize) -> f64 {
        (self.hi[d] - self.lo[d]) / self.cells[d] as f64
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|d| self.width(d)).product()
    }

    /// Cell of `x`, or `None` outside the box. The upper wall belongs to
    /// the last cell.
    #[inline]
    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for d in 0..self.dim() {
            if x[d] < self.lo[d] || x[d] > self.hi[d] {
                return None;
            }
            let k = (((x[d] - self.lo[d]) / self.width(d)) as usize).min(self.cells[d] - 1);
            idx = idx * self.cells[d] + k;
        }
        Some(idx)
    }

    /// Particle counts per cell (particles outside the box are ignored).
    pub fn histogram(&self, ens: &Ensemble) -> Vec<u64> {
        let mut h = vec![0u64; self.len()];
        for p in ens.points().chunks_exact(ens.dim()) {
            if let Some(c) = self.cell_of(p) {
                h[c] += 1;
            }
        }
        h
    }

    /// Cell masses of a tabulated density whose lattice is aligned with the
    /// cell edges; renormalized to the box.
    pub fn masses(&self, density: &TabulatedDensity) -> Result<Vec<f64>> {
        if density.dim() != self.dim() {
            return Err(Error::GridMismatch("density and cells differ in dimension".into()));
        }
        let mut ranges: Vec<Vec<(usize, usize)>> = Vec::new();
        for (d, a) in density.axes().iter().enumerate() {
            let mut r = Vec::new();
            for k in 0..self.cells[d] {
                let edge = |k: usize| {
                    let u = (self.lo[d] + k as f64 * self.width(d) - a.lo) / a.h;
                    let j = u.round();
                    if (u - j).abs() > 1e-6 || j < -1e-9 {
                        return Err(Error::GridMismatch("cell edges do not fall on density nodes".into()));
                    }
                    Ok((j as usize).min(a.segments()))
                };
                r.push((edge(k)?, edge(k + 1)?));
            }
            ranges.push(r);
        }
        let mut m = Vec::with_capacity(self.len());
        match self.dim() {
            1 => {
                for &r in &ranges[0] {
                    m.push(if r.1 > r.0 { density.box_mass(&[r]) } else { 0.0 });
                }
            }
            _ => {
                for &rx in &ranges[0] {
                    for &ry in &ranges[1] {
                        m.push(if rx.1 > rx.0 && ry.1 > ry.0 { density.box_mass(&[rx, ry]) } else { 0.0 });
                    }
                }
            }
        }
        normalize(m)
    }

    /// Cell masses of an arbitrary density by tensor Gauss-Legendre
    /// quadrature (`sub` panels of `order` points per cell and axis).
    pub fn masses_of(&self, f: impl Fn(&[f64]) -> f64 + Sync, sub: usize, order: usize) -> Result<Vec<f64>> {
        use rayon::prelude::*;
        let (xs, ws) = gauss_legendre(order);
        let sub = sub.max(1);
        let m: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|c| {
                let mut idx = [0usize; 2];
                let mut rem = c;
                for d in (0..self.dim()).rev() {
                    idx[d] = rem % self.cells[d];
                    rem /= self.cells[d];
                }
                let nodes_of = |d: usize| {
                    let w = self.width(d) / sub as f64;
                    let a0 = self.lo[d] + idx[d] as f64 * self.width(d);
                    let mut pts = Vec::new();
                    for s in 0..sub {
                        let a = a0 + s as f64 * w;
                        for (x, wt) in xs.iter().zip(&ws) {
                            pts.push((a + 0.5 * w * (x + 1.0), 0.5 * w * wt));
                        }
                    }
                    pts
                };
                match self.dim() {
                    1 => nodes_of(0).iter().map(|&(x, w)| w * f(&[x])).sum(),
                    _ => {
                        let (px, py) = (nodes_of(0), nodes_of(1));
                        let mut acc = 0.0;
                        for &(x, wx) in &px {
                            for &(y, wy) in &py {
                                acc += wx * wy * f(&[x, y]);
                            }
                        }
                        acc
                    }
                }
            })
            .collect();
        normalize(m)
    }
}

fn normalize(mut m: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = m.iter().sum();
    if !(total > 0.0) {
        return Err(Error::param("density", "no mass inside the cells"));
    }
    m.iter_mut().for_each(|v| *v /= total);
    Ok(m)
}

/// Factors `total` as evenly as possible over `dim` axes, larger first.
pub fn split_total(total: usize, dim: usize) -> Result<Vec<usize>> {
    if total == 0 {
        return Err(Error::param("cells", "need at least one cell"));
    }
    if dim == 1 {
        return Ok(vec![total]);
    }
    let mut best = (1, total);
    for a in 1..=total {
        if total % a == 0 {
            let b = total / a;
            if a >= b && a - b < best.1.abs_diff(best.0) {
                best = (a, b);
            }
        }
    }
    Ok(vec![best.0, best.1])
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 0 { (1.0, 0.0) } else if n == 1 { (x, 1.0) } else { (p1, p0) };
            let dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                let dp = {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    n as f64 * (x * p1 - p0) / (x * x - 1.0)
                };
                ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
                break;
            }
        }
        xs[i] = x;
    }
    (xs, ws)
}

/// `H = sum_c P_c ln(P_c / Q_c)` from empirical cell fractions `P_c` and
/// reference cell masses `Q_c`. This equals the cell-averaged form
/// `sum rho_bar ln(rho_bar / q_bar) dV` because the cell volume cancels in
/// the ratio. Returns `+inf` when a cell is occupied but has no reference
/// mass. The reference is normally `TabulatedDensity::born(psi)` at the
/// ensemble's time.
pub fn h_function(ens: &Ensemble, reference: &TabulatedDensity, cg: &CoarseGraining) -> Result<f64> {
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let masses = cg.masses(reference)?;
    let counts = cg.histogram(ens);
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    Ok(h_from_counts(&counts, &masses))
}

pub fn h_from_counts(counts: &[u64], reference: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut h = 0.0;
    for (&c, &q) in counts.iter().zip(reference) {
        if c == 0 {
            continue;
        }
        if q <= 0.0 {
            return f64::INFINITY;
        }
        let p = c as f64 / n as f64;
        h += p * (p / q).ln();
    }
    h
}

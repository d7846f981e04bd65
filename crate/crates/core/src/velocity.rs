//! Pilot-wave velocity fields on grids.
//!
//! The guidance velocity is `Im(grad psi / psi)`, equivalently the current
//! `j = Im(psi* grad psi)` divided by `|psi|^2`. Gradients are spectral.

use num_complex::Complex64;

use crate::basis::reflect;
use crate::error::Result;
use crate::field::{GuidanceField, NodeClamp};
use crate::grid::{cubic_stencil, resolve_index, stored_len, Axis, Boundary, Grid};
use crate::spectral::{extend_field, Spectral};
use crate::wavefunction::Wavefunction;

/// Per-point velocity components, `components[d][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    pub grid: Grid,
    pub components: Vec<Vec<f64>>,
    /// Points where the node cap was applied.
    pub clamped: usize,
}

fn gradients(psi: &Wavefunction) -> Vec<Vec<Complex64>> {
    let sp = Spectral::new(psi.grid());
    (0..psi.grid().dim()).map(|d| sp.derivative(psi.amplitudes(), d)).collect()
}

/// `Im(grad psi / psi)` at every grid point, capped near nodes.
pub fn velocity_field(psi: &Wavefunction, clamp: NodeClamp) -> Result<VelocityGrid> {
    psi.check_normalized()?;
    let grads = gradients(psi);
    let dens = psi.density();
    let dmax = dens.iter().cloned().fold(0.0, f64::max);
    let dim = psi.grid().dim();
    let mut comps = vec![vec![0.0; dens.len()]; dim];
    let mut clamped = 0;
    let mut v = [0.0; 2];
    for (i, a) in psi.amplitudes().iter().enumerate() {
        for d in 0..dim {
            v[d] = (grads[d][i] / a).im;
        }
        if clamp.apply(dens[i] / dmax, &mut v[..dim]) {
            clamped += 1;
        }
        for d in 0..dim {
            comps[d][i] = v[d];
        }
    }
    Ok(VelocityGrid { grid: psi.grid().clone(), components: comps, clamped })
}

/// `j / |psi|^2` with `j = Im(psi* grad psi)`, uncapped. Infinite or NaN at
/// exact nodes; used as the second route to the same field.
pub fn current_over_density(psi: &Wavefunction) -> Vec<Vec<f64>> {
    let grads = gradients(psi);
    let amps = psi.amplitudes();
    grads
        .iter()
        .map(|g| {
            g.iter()
                .zip(amps)
                .map(|(gd, a)| (a.re * gd.im - a.im * gd.re) / a.norm_sqr())
                .collect()
        })
        .collect()
}

/// `psi` and its gradient on the extended interpolation layout.
#[derive(Debug, Clone)]
pub struct GridSnapshot {
    pub(crate) grid: Grid,
    pub(crate) time: f64,
    pub(crate) psi: Vec<Complex64>,
    pub(crate) grad: Vec<Vec<Complex64>>,
    pub(crate) max_density: f64,
    pub(crate) strides: [usize; 2],
}

impl GridSnapshot {
    pub fn new(psi: &Wavefunction) -> Self {
        Self::with_spectral(psi, &Spectral::new(psi.grid()))
    }

    pub(crate) fn with_spectral(psi: &Wavefunction, sp: &Spectral) -> Self {
        let grid = psi.grid().clone();
        let ext = extend_field(&grid, psi.amplitudes());
        let grad = (0..grid.dim()).map(|d| sp.derivative_extended(psi.amplitudes(), d)).collect();
        let max_density = psi.amplitudes().iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
        let strides = match grid.dim() {
            1 => [1, 0],
            _ => [stored_len(grid.axis(1)), 1],
        };
        GridSnapshot { grid, time: psi.time(), psi: ext, grad, max_density, strides }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Cubic interpolation of `(psi, grad psi)` at `x`.
    #[inline]
    pub(crate) fn interpolate(&self, x: &[f64]) -> (Complex64, [Complex64; 2]) {
        let zero = Complex64::new(0.0, 0.0);
        let axes = self.grid.axes();
        let mut psi = zero;
        let mut grad = [zero; 2];
        match axes.len() {
            1 => {
                let a = &axes[0];
                let (i0, w) = cubic_stencil(a.coordinate(x[0]));
                for k in 0..4 {
                    let (j, s_odd) = resolve_index(a, i0 + k as isize, true);
                    let (_, s_even) = resolve_index(a, i0 + k as isize, false);
                    psi += self.psi[j] * (w[k] * s_odd);
                    grad[0] += self.grad[0][j] * (w[k] * s_even);
                }
            }
            2 => {
                let (ax, ay) = (&axes[0], &axes[1]);
                let (i0, wx) = cubic_stencil(ax.coordinate(x[0]));
                let (j0, wy) = cubic_stencil(ay.coordinate(x[1]));
                let mut ix = [(0usize, 0.0, 0.0); 4];
                let mut iy = [(0usize, 0.0, 0.0); 4];
                for k in 0..4 {
                    let (i, so) = resolve_index(ax, i0 + k as isize, true);
                    let (_, se) = resolve_index(ax, i0 + k as isize, false);
                    ix[k] = (i, so, se);
                    let (j, so) = resolve_index(ay, j0 + k as isize, true);
                    let (_, se) = resolve_index(ay, j0 + k as isize, false);
                    iy[k] = (j, so, se);
                }
                let sx = self.strides[0];
                for (a, &(i, sxo, sxe)) in ix.iter().enumerate() {
                    let mut row_psi = zero;
                    let mut row_gx = zero;
                    let mut row_gy = zero;
                    for (b, &(j, syo, sye)) in iy.iter().enumerate() {
                        let idx = i * sx + j;
                        row_psi += self.psi[idx] * (wy[b] * syo);
                        row_gx += self.grad[0][idx] * (wy[b] * syo);
                        row_gy += self.grad[1][idx] * (wy[b] * sye);
                    }
                    psi += row_psi * (wx[a] * sxo);
                    grad[0] += row_gx * (wx[a] * sxe);
                    grad[1] += row_gy * (wx[a] * sxo);
                }
            }
            _ => unreachable!(),
        }
        (psi, grad)
    }

    /// Interpolated guidance velocity at `x` (uncapped) and `|psi|^2`.
    pub fn velocity_at(&self, x: &[f64], v: &mut [f64]) -> f64 {
        let (p, g) = self.interpolate(x);
        let r = p.norm_sqr();
        for d in 0..self.grid.dim() {
            v[d] = (p.conj() * g[d]).im / r;
        }
        r
    }
}

fn axis_contains(a: &Axis, x: f64) -> bool {
    let (lo, hi) = a.interior();
    x >= lo && x <= hi
}

fn confine_on(grid: &Grid, x: &mut [f64]) -> bool {
    for (a, xi) in grid.axes().iter().zip(x.iter_mut()) {
        if a.boundary == Boundary::Dirichlet {
            *xi = reflect(*xi, a.lo, a.hi);
        }
    }
    grid.axes().iter().zip(x.iter()).all(|(a, &xi)| axis_contains(a, xi))
}

/// Guidance between two stored snapshots, linear in time.
pub struct SnapshotPair<'a> {
    pub(crate) a: &'a GridSnapshot,
    pub(crate) b: &'a GridSnapshot,
}

impl<'a> SnapshotPair<'a> {
    pub fn new(a: &'a GridSnapshot, b: &'a GridSnapshot) -> Self {
        SnapshotPair { a, b }
    }
}

impl GuidanceField for SnapshotPair<'_> {
    type Slice = f64;

    fn dim(&self) -> usize {
        self.a.grid.dim()
    }

    fn slice(&self, t: f64) -> f64 {
        let span = self.b.time - self.a.time;
        if span <= 0.0 {
            0.0
        } else {
            ((t - self.a.time) / span).clamp(0.0, 1.0)
        }
    }

    #[inline]
    fn velocity(&self, w: &f64, x: &[f64], v: &mut [f64]) -> f64 {
        let (pa, ga) = self.a.interpolate(x);
        let (pb, gb) = if *w > 0.0 { self.b.interpolate(x) } else { (pa, ga) };
        let p = pa * (1.0 - w) + pb * *w;
        let r = p.norm_sqr();
        for d in 0..self.dim() {
            let g = ga[d] * (1.0 - w) + gb[d] * *w;
            v[d] = (p.conj() * g).im / r;
        }
        let dmax = self.a.max_density.max(self.b.max_density);
        r / dmax
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.a.grid.axes().iter().zip(x).all(|(a, &xi)| axis_contains(a, xi))
    }

    fn confine(&self, x: &mut [f64]) -> bool {
        confine_on(&self.a.grid, x)
    }

    fn spacing(&self) -> f64 {
        self.a.grid.min_spacing()
    }

    fn span(&self) -> f64 {
        self.a.grid.max_span()
    }
}

/// A single stored snapshot used as a frozen field.
impl GuidanceField for GridSnapshot {
    type Slice = ();

    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn slice(&self, _t: f64) {}

    fn velocity(&self, _s: &(), x: &[f64], v: &mut [f64]) -> f64 {
        self.velocity_at(x, v) / self.max_density
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.grid.axes().iter().zip(x).all(|(a, &xi)| axis_contains(a, xi))
    }

    fn confine(&self, x: &mut [f64]) -> bool {
        confine_on(&self.grid, x)
    }

    fn spacing(&self) -> f64 {
        self.grid.min_spacing()
    }

    fn span(&self) -> f64 {
        self.grid.max_span()
    }
}

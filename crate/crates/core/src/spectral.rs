//! Fourier machinery shared by propagation and differentiation.
//!
//! All operations act along one axis of a row-major field. Dirichlet axes
//! are handled through their odd extension, so the same diagonal Fourier
//! multipliers give sine-series derivatives and exact well propagation.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Axis, Boundary, Grid};

/// FFT plans and wavenumbers for one axis.
#[derive(Clone)]
pub(crate) struct AxisTransform {
    axis: Axis,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
    k_full: Vec<f64>,
}

impl AxisTransform {
    pub(crate) fn new(axis: Axis) -> Self {
        let m = axis.transform_len();
        let mut planner = FftPlanner::new();
        AxisTransform {
            axis,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
            k: axis.wavenumbers(),
            k_full: axis.wavenumbers_full(),
        }
    }

    /// Applies the Fourier multiplier `mult(k)` to one line of length `n`.
    /// `scratch` must hold `transform_len` entries.
    fn apply_line<F: Fn(f64) -> Complex64>(&self, line: &mut [Complex64], scratch: &mut [Complex64], mult: &F, full: bool) {
        let n = self.axis.n;
        let m = self.axis.transform_len();
        match self.axis.boundary {
            Boundary::Periodic => scratch[..n].copy_from_slice(line),
            Boundary::Dirichlet => {
                scratch[..n].copy_from_slice(line);
                scratch[0] = Complex64::new(0.0, 0.0);
                scratch[n] = Complex64::new(0.0, 0.0);
                for j in 1..n {
                    scratch[m - j] = -line[j];
                }
            }
        }
        self.forward.process(&mut scratch[..m]);
        let ks = if full { &self.k_full } else { &self.k };
        let norm = 1.0 / m as f64;
        for (c, &k) in scratch[..m].iter_mut().zip(ks) {
            *c *= mult(k) * norm;
        }
        self.inverse.process(&mut scratch[..m]);
        line.copy_from_slice(&scratch[..n]);
    }

    /// Like `apply_line` but keeps the extended result, `n + 1` entries for
    /// Dirichlet axes (the value on the far wall included).
    fn apply_line_extended<F: Fn(f64) -> Complex64>(
        &self,
        line: &[Complex64],
        out: &mut [Complex64],
        scratch: &mut [Complex64],
        mult: &F,
    ) {
        let n = self.axis.n;
        let m = self.axis.transform_len();
        scratch[..n].copy_from_slice(line);
        if self.axis.boundary == Boundary::Dirichlet {
            scratch[0] = Complex64::new(0.0, 0.0);
            scratch[n] = Complex64::new(0.0, 0.0);
            for j in 1..n {
                scratch[m - j] = -line[j];
            }
        }
        self.forward.process(&mut scratch[..m]);
        let norm = 1.0 / m as f64;
        for (c, &k) in scratch[..m].iter_mut().zip(&self.k) {
            *c *= mult(k) * norm;
        }
        self.inverse.process(&mut scratch[..m]);
        let len = out.len();
        out.copy_from_slice(&scratch[..len]);
    }
}

/// Per-axis transforms for a whole grid.
#[derive(Clone)]
pub(crate) struct Spectral {
    grid: Grid,
    axes: Vec<AxisTransform>,
}

impl Spectral {
    pub(crate) fn new(grid: &Grid) -> Self {
        Spectral { grid: grid.clone(), axes: grid.axes().iter().map(|a| AxisTransform::new(*a)).collect() }
    }

    fn for_each_line<F: FnMut(&mut [Complex64], &AxisTransform, &mut [Complex64])>(
        &self,
        field: &mut [Complex64],
        d: usize,
        mut f: F,
    ) {
        let tr = &self.axes[d];
        let mut scratch = vec![Complex64::new(0.0, 0.0); tr.axis.transform_len()];
        match self.grid.dim() {
            1 => f(field, tr, &mut scratch),
            2 => {
                let nx = self.grid.axis(0).n;
                let ny = self.grid.axis(1).n;
                if d == 1 {
                    for row in field.chunks_exact_mut(ny) {
                        f(row, tr, &mut scratch);
                    }
                } else {
                    let mut col = vec![Complex64::new(0.0, 0.0); nx];
                    for j in 0..ny {
                        for i in 0..nx {
                            col[i] = field[i * ny + j];
                        }
                        f(&mut col, tr, &mut scratch);
                        for i in 0..nx {
                            field[i * ny + j] = col[i];
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    /// Spectral derivative along axis `d`.
    pub(crate) fn derivative(&self, field: &[Complex64], d: usize) -> Vec<Complex64> {
        let mut out = field.to_vec();
        let i = Complex64::new(0.0, 1.0);
        self.for_each_line(&mut out, d, |line, tr, scratch| tr.apply_line(line, scratch, &|k| i * k, false));
        out
    }

    /// Spectral second derivative along axis `d`.
    pub(crate) fn second_derivative(&self, field: &[Complex64], d: usize) -> Vec<Complex64> {
        let mut out = field.to_vec();
        self.for_each_line(&mut out, d, |line, tr, scratch| {
            tr.apply_line(line, scratch, &|k| Complex64::new(-k * k, 0.0), true)
        });
        out
    }

    /// Free propagation `exp(-i k^2 dt / 2)` along every axis.
    pub(crate) fn kinetic(&self, field: &mut [Complex64], dt: f64) {
        for d in 0..self.grid.dim() {
            self.for_each_line(field, d, |line, tr, scratch| {
                tr.apply_line(line, scratch, &|k| Complex64::from_polar(1.0, -0.5 * k * k * dt), true)
            });
        }
    }

    /// Translates each line along axis `along` by an amount depending on the
    /// coordinate of the other axis: `f(x, y) -> f(x, y - shift(x))`.
    /// Only meaningful for two periodic axes.
    pub(crate) fn shear(&self, field: &mut [Complex64], along: usize, shift: impl Fn(f64) -> f64) {
        debug_assert_eq!(self.grid.dim(), 2);
        let other = 1 - along;
        let other_axis = *self.grid.axis(other);
        let tr = &self.axes[along];
        let mut scratch = vec![Complex64::new(0.0, 0.0); tr.axis.transform_len()];
        let ny = self.grid.axis(1).n;
        let mut line = vec![Complex64::new(0.0, 0.0); self.grid.axis(along).n];
        for o in 0..other_axis.n {
            let s = shift(other_axis.point(o));
            let idx = |a: usize| if along == 1 { o * ny + a } else { a * ny + o };
            for (a, v) in line.iter_mut().enumerate() {
                *v = field[idx(a)];
            }
            tr.apply_line(&mut line, &mut scratch, &|k| Complex64::from_polar(1.0, -k * s), false);
            for (a, v) in line.iter().enumerate() {
                field[idx(a)] = *v;
            }
        }
    }

    /// Derivative along `d`, stored on the extended interpolation layout
    /// (`n + 1` points on Dirichlet axes).
    pub(crate) fn derivative_extended(&self, field: &[Complex64], d: usize) -> Vec<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        let mult = |k: f64| i * k;
        let axes = self.grid.axes();
        let ext: Vec<usize> = axes.iter().map(crate::grid::stored_len).collect();
        match axes.len() {
            1 => {
                let tr = &self.axes[0];
                let mut scratch = vec![Complex64::new(0.0, 0.0); tr.axis.transform_len()];
                let mut out = vec![Complex64::new(0.0, 0.0); ext[0]];
                tr.apply_line_extended(field, &mut out, &mut scratch, &mult);
                out
            }
            2 => {
                {
                    let (nx, ny) = (axes[0].n, axes[1].n);
                    let tr = &self.axes[d];
                    let mut scratch = vec![Complex64::new(0.0, 0.0); tr.axis.transform_len()];
                    let mut padded = vec![Complex64::new(0.0, 0.0); ext[0] * ext[1]];
                    if d == 1 {
                        let mut line = vec![Complex64::new(0.0, 0.0); ext[1]];
                        for i in 0..nx {
                            tr.apply_line_extended(&field[i * ny..(i + 1) * ny], &mut line, &mut scratch, &mult);
                            padded[i * ext[1]..(i + 1) * ext[1]].copy_from_slice(&line);
                        }
                    } else {
                        let mut col = vec![Complex64::new(0.0, 0.0); nx];
                        let mut line = vec![Complex64::new(0.0, 0.0); ext[0]];
                        for j in 0..ny {
                            for i in 0..nx {
                                col[i] = field[i * ny + j];
                            }
                            tr.apply_line_extended(&col, &mut line, &mut scratch, &mult);
                            for i in 0..ext[0] {
                                padded[i * ext[1] + j] = line[i];
                            }
                        }
                    }
                    padded
                }
            }
            _ => unreachable!(),
        }
    }
}

/// Copies a native-layout field into the extended interpolation layout
/// (wall values on Dirichlet axes are zero for odd fields).
pub(crate) fn extend_field(grid: &Grid, field: &[Complex64]) -> Vec<Complex64> {
    let axes = grid.axes();
    let ext: Vec<usize> = axes.iter().map(crate::grid::stored_len).collect();
    match axes.len() {
        1 => {
            let mut out = field.to_vec();
            out.resize(ext[0], Complex64::new(0.0, 0.0));
            out
        }
        2 => {
            let (nx, ny) = (axes[0].n, axes[1].n);
            let mut out = vec![Complex64::new(0.0, 0.0); ext[0] * ext[1]];
            for i in 0..nx {
                out[i * ext[1]..i * ext[1] + ny].copy_from_slice(&field[i * ny..(i + 1) * ny]);
            }
            out
        }
        _ => unreachable!(),
    }
}

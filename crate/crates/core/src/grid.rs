//! Uniform spatial grids in one or two dimensions.
//!
//! Two boundary conditions are supported per axis. A `Periodic` axis is the
//! usual FFT box `[lo, hi)`; wavefunctions living on it must vanish on a
//! two-point margin at each end. A `Dirichlet` axis is a hard-walled box
//! `[lo, hi]` where the wavefunction is zero on both walls; points are
//! `lo + j h` for `j = 0..n` with the wall at `hi` implicit, and spectral
//! operations work on the odd extension (a sine series).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of grid points at each end of a periodic axis that must stay empty.
pub const MARGIN_POINTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub boundary: Boundary,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize, boundary: Boundary) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::param("axis", format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::param("axis", format!("point count {n} must be a power of two >= 16")));
        }
        Ok(Axis { lo, hi, n, boundary })
    }

    pub fn periodic(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(lo, hi, n, Boundary::Periodic)
    }

    pub fn dirichlet(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(lo, hi, n, Boundary::Dirichlet)
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    #[inline]
    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn point(&self, j: usize) -> f64 {
        self.lo + j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Usable interior for particles: the margin-free region on periodic
    /// axes, the full box on Dirichlet axes.
    pub fn interior(&self) -> (f64, f64) {
        match self.boundary {
            Boundary::Periodic => {
                let h = self.spacing();
                (self.lo + MARGIN_POINTS as f64 * h, self.hi - MARGIN_POINTS as f64 * h)
            }
            Boundary::Dirichlet => (self.lo, self.hi),
        }
    }

    /// Angular wavenumbers of the FFT line used for spectral operations, in
    /// FFT order. Dirichlet axes use the length-`2n` odd extension. The
    /// Nyquist entry is zeroed so first derivatives stay real-symmetric.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let m = self.transform_len();
        let period = m as f64 * self.spacing();
        let dk = 2.0 * std::f64::consts::PI / period;
        (0..m)
            .map(|j| {
                if j < m / 2 {
                    j as f64 * dk
                } else if j == m / 2 {
                    0.0
                } else {
                    (j as f64 - m as f64) * dk
                }
            })
            .collect()
    }

    /// Signed wavenumbers including the Nyquist magnitude, for kinetic phases.
    pub fn wavenumbers_full(&self) -> Vec<f64> {
        let m = self.transform_len();
        let period = m as f64 * self.spacing();
        let dk = 2.0 * std::f64::consts::PI / period;
        (0..m)
            .map(|j| if j <= m / 2 { j as f64 * dk } else { (j as f64 - m as f64) * dk })
            .collect()
    }

    #[inline]
    pub fn transform_len(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.n,
            Boundary::Dirichlet => 2 * self.n,
        }
    }

    /// Fractional grid coordinate of `x`.
    #[inline]
    pub fn coordinate(&self, x: f64) -> f64 {
        (x - self.lo) / self.spacing()
    }
}

/// A tensor-product grid of one or two axes, row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::param("grid", format!("dimension must be 1 or 2, got {}", axes.len())));
        }
        Ok(Grid { axes })
    }

    pub fn line(axis: Axis) -> Self {
        Grid { axes: vec![axis] }
    }

    pub fn plane(x: Axis, y: Axis) -> Self {
        Grid { axes: vec![x, y] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    #[inline]
    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    #[inline]
    pub fn axis(&self, d: usize) -> &Axis {
        &self.axes[d]
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `prod h_d`.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// Coordinates of flat index `idx`.
    pub fn point(&self, idx: usize, out: &mut [f64]) {
        match self.axes.as_slice() {
            [a] => out[0] = a.point(idx),
            [a, b] => {
                out[0] = a.point(idx / b.n);
                out[1] = b.point(idx % b.n);
            }
            _ => unreachable!(),
        }
    }

    /// Largest span over the axes.
    pub fn max_span(&self) -> f64 {
        self.axes.iter().map(Axis::span).fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).fold(f64::INFINITY, f64::min)
    }

    /// Whether `x` lies inside the particle-accessible region.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.axes.iter().zip(x).all(|(a, &xi)| {
            let (lo, hi) = a.interior();
            xi >= lo && xi <= hi
        })
    }

    /// Flat indices of the margin points of every periodic axis.
    pub fn margin_indices(&self) -> Vec<usize> {
        let mut idx = Vec::new();
        let in_margin = |a: &Axis, j: usize| {
            a.boundary == Boundary::Periodic && (j < MARGIN_POINTS || j >= a.n - MARGIN_POINTS)
        };
        match self.axes.as_slice() {
            [a] => idx.extend((0..a.n).filter(|&j| in_margin(a, j))),
            [a, b] => {
                for i in 0..a.n {
                    for j in 0..b.n {
                        if in_margin(a, i) || in_margin(b, j) {
                            idx.push(i * b.n + j);
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        idx
    }
}

/// Four-point Lagrange stencil for fractional coordinate `u`: the first
/// index and the weights of points `i0..i0+4`.
#[inline]
pub(crate) fn cubic_stencil(u: f64) -> (isize, [f64; 4]) {
    let i = u.floor();
    let s = u - i;
    let w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    (i as isize - 1, [w0, w1, w2, w3])
}

/// Maps an integer grid index onto stored storage of an axis. Periodic axes
/// wrap onto `0..n`. Dirichlet axes are stored on `0..=n` (both walls) and
/// indices beyond reflect through the walls with the parity of the sampled
/// field: `odd` for the wavefunction and tangential derivatives, even for
/// the derivative normal to the wall.
#[inline]
pub(crate) fn resolve_index(axis: &Axis, j: isize, odd: bool) -> (usize, f64) {
    let n = axis.n as isize;
    match axis.boundary {
        Boundary::Periodic => (j.rem_euclid(n) as usize, 1.0),
        Boundary::Dirichlet => {
            let m = 2 * n;
            let k = j.rem_euclid(m);
            if k <= n {
                (k as usize, 1.0)
            } else {
                ((m - k) as usize, if odd { -1.0 } else { 1.0 })
            }
        }
    }
}

/// Stored length of an axis for interpolation tables.
#[inline]
pub(crate) fn stored_len(axis: &Axis) -> usize {
    match axis.boundary {
        Boundary::Periodic => axis.n,
        Boundary::Dirichlet => axis.n + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_axes() {
        assert!(Axis::periodic(0.0, 1.0, 15).is_err());
        assert!(Axis::periodic(0.0, 1.0, 24).is_err());
        assert!(Axis::periodic(1.0, 1.0, 32).is_err());
        assert!(Axis::periodic(0.0, 1.0, 16).is_ok());
    }

    #[test]
    fn wavenumbers_match_period() {
        let a = Axis::periodic(-4.0, 4.0, 16).unwrap();
        let k = a.wavenumbers();
        let dk = 2.0 * std::f64::consts::PI / 8.0;
        assert!((k[1] - dk).abs() < 1e-14);
        assert!((k[15] + dk).abs() < 1e-14);
        assert_eq!(k[8], 0.0);
        let d = Axis::dirichlet(0.0, std::f64::consts::PI, 16).unwrap();
        // odd extension has period 2*pi, so k = 1, 2, ...
        assert!((d.wavenumbers()[3] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn cubic_stencil_reproduces_cubics() {
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x - 0.25 * x * x * x;
        for &u in &[2.0, 2.3, 2.999, 5.5] {
            let (i0, w) = cubic_stencil(u);
            let v: f64 = (0..4).map(|k| w[k] * f((i0 + k as isize) as f64)).sum();
            assert!((v - f(u)).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn dirichlet_reflection() {
        let a = Axis::dirichlet(0.0, 1.0, 16).unwrap();
        assert_eq!(resolve_index(&a, -1, true), (1, -1.0));
        assert_eq!(resolve_index(&a, 17, true), (15, -1.0));
        assert_eq!(resolve_index(&a, 16, true), (16, 1.0));
        assert_eq!(resolve_index(&a, -2, false), (2, 1.0));
    }

    #[test]
    fn margins_cover_periodic_edges_only() {
        let g = Grid::plane(Axis::periodic(0.0, 1.0, 16).unwrap(), Axis::dirichlet(0.0, 1.0, 16).unwrap());
        let m = g.margin_indices();
        assert_eq!(m.len(), 4 * 16);
    }
}

//! Gridded wavefunctions and their text snapshot format.
//!
//! Units are `hbar = m = 1` throughout.
//!
//! Snapshot format (whitespace separated, `#` lines are comments):
//!
//! ```text
//! # subquantum wavefunction v1
//! dim 2
//! time 0.25
//! axis 0 -8 8 128 periodic
//! axis 1 -8 8 128 periodic
//! x y re im
//! -8 -8 0 0
//! ...
//! ```

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Axis, Boundary, Grid};

/// Tolerance on `| ||psi|| - 1 |` accepted as normalized.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    grid: Grid,
    amps: Vec<Complex64>,
    time: f64,
}

impl Wavefunction {
    pub fn new(grid: Grid, amps: Vec<Complex64>, time: f64) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} amplitudes for {} grid points", amps.len(), grid.len())));
        }
        Ok(Wavefunction { grid, amps, time })
    }

    /// Samples `f` on the grid and normalizes.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let mut x = vec![0.0; grid.dim()];
        let amps = (0..grid.len())
            .map(|i| {
                grid.point(i, &mut x);
                f(&x)
            })
            .collect();
        let mut psi = Wavefunction::new(grid, amps, 0.0)?;
        psi.normalize()?;
        Ok(psi)
    }

    /// Gaussian packet `exp(-(x-x0)^2/(4 sigma^2) + i k x)`; `sigma` is the
    /// standard deviation of `|psi|^2`. Two-dimensional grids take one
    /// `(center, sigma, k)` triple per axis.
    pub fn gaussian(grid: Grid, packets: &[(f64, f64, f64)]) -> Result<Self> {
        if packets.len() != grid.dim() {
            return Err(Error::param("packets", "one (center, sigma, k) per axis"));
        }
        Self::from_fn(grid, |x| {
            let mut phase = 0.0;
            let mut log_amp = 0.0;
            for (&xi, &(c, s, k)) in x.iter().zip(packets) {
                log_amp -= (xi - c) * (xi - c) / (4.0 * s * s);
                phase += k * xi;
            }
            Complex64::from_polar(log_amp.exp(), phase)
        })
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    #[inline]
    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn norm(&self) -> f64 {
        (self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotNormalized { norm: n });
        }
        for a in &mut self.amps {
            *a /= n;
        }
        Ok(())
    }

    pub fn check_normalized(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(())
    }

    /// `|psi|^2` at every grid point.
    pub fn density(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>` by grid quadrature.
    pub fn inner(&self, other: &Wavefunction) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("inner product of wavefunctions on different grids".into()));
        }
        let s: Complex64 = self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Probability carried by the periodic-axis margin points.
    pub fn margin_mass(&self) -> f64 {
        self.grid.margin_indices().iter().map(|&i| self.amps[i].norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// Largest modulus on the margin points.
    pub fn margin_max_modulus(&self) -> f64 {
        self.grid.margin_indices().iter().map(|&i| self.amps[i].norm()).fold(0.0, f64::max)
    }

    /// Writes the columnar text snapshot.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# subquantum wavefunction v1\n");
        let _ = writeln!(out, "dim {}", self.grid.dim());
        let _ = writeln!(out, "time {:e}", self.time);
        for (d, a) in self.grid.axes().iter().enumerate() {
            let b = match a.boundary {
                Boundary::Periodic => "periodic",
                Boundary::Dirichlet => "dirichlet",
            };
            let _ = writeln!(out, "axis {d} {:e} {:e} {} {b}", a.lo, a.hi, a.n);
        }
        out.push_str(if self.grid.dim() == 1 { "x re im\n" } else { "x y re im\n" });
        let mut x = vec![0.0; self.grid.dim()];
        for (i, a) in self.amps.iter().enumerate() {
            self.grid.point(i, &mut x);
            for xi in &x {
                let _ = write!(out, "{xi:e} ");
            }
            let _ = writeln!(out, "{:e} {:e}", a.re, a.im);
        }
        out
    }

    /// Parses a snapshot written by [`Wavefunction::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse(format!("missing {what}")));
        let parse_f = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        let dim_line = next("dim")?;
        let dim: usize = dim_line
            .strip_prefix("dim ")
            .ok_or_else(|| Error::Parse("expected `dim`".into()))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("dim: {e}")))?;
        let time = parse_f(next("time")?.strip_prefix("time ").ok_or_else(|| Error::Parse("expected `time`".into()))?.trim())?;
        let mut axes = Vec::with_capacity(dim);
        for _ in 0..dim {
            let l = next("axis")?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 6 || f[0] != "axis" {
                return Err(Error::Parse(format!("bad axis line `{l}`")));
            }
            let boundary = match f[5] {
                "periodic" => Boundary::Periodic,
                "dirichlet" => Boundary::Dirichlet,
                other => return Err(Error::Parse(format!("unknown boundary `{other}`"))),
            };
            let n: usize = f[4].parse().map_err(|e| Error::Parse(format!("n: {e}")))?;
            axes.push(Axis::new(parse_f(f[2])?, parse_f(f[3])?, n, boundary)?);
        }
        let grid = Grid::new(axes)?;
        let _header = next("column header")?;
        let mut amps = Vec::with_capacity(grid.len());
        for l in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != dim + 2 {
                return Err(Error::Parse(format!("bad row `{l}`")));
            }
            amps.push(Complex64::new(parse_f(f[dim])?, parse_f(f[dim + 1])?));
        }
        Wavefunction::new(grid, amps, time)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_is_normalized_and_has_requested_width() {
        let g = Grid::line(Axis::periodic(-20.0, 20.0, 512).unwrap());
        let psi = Wavefunction::gaussian(g.clone(), &[(1.0, 1.5, 0.3)]).unwrap();
        psi.check_normalized().unwrap();
        let h = g.cell_volume();
        let xs = g.axis(0).points();
        let rho = psi.density();
        let mean: f64 = xs.iter().zip(&rho).map(|(x, r)| x * r).sum::<f64>() * h;
        let var: f64 = xs.iter().zip(&rho).map(|(x, r)| (x - mean).powi(2) * r).sum::<f64>() * h;
        assert!((mean - 1.0).abs() < 1e-10);
        assert!((var.sqrt() - 1.5).abs() < 1e-10);
    }

    #[test]
    fn snapshot_text_round_trip() {
        let g = Grid::plane(Axis::periodic(-4.0, 4.0, 16).unwrap(), Axis::dirichlet(0.0, 3.0, 16).unwrap());
        let psi = Wavefunction::from_fn(g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.1 * x[1]) * (x[1]).sin()).unwrap();
        let back = Wavefunction::from_text(&psi.to_text()).unwrap();
        assert_eq!(back.grid(), psi.grid());
        for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_length_mismatch() {
        let g = Grid::line(Axis::periodic(0.0, 1.0, 16).unwrap());
        assert!(matches!(Wavefunction::new(g, vec![Complex64::new(0.0, 0.0); 3], 0.0), Err(Error::GridMismatch(_))));
    }
}

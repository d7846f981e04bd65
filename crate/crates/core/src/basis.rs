//! Infinite-square-well eigenbasis and analytic mode superpositions.
//!
//! `phi_n(x) = sqrt(2/L) sin(n pi x / L)`, `E_n = n^2 pi^2 / (2 L^2)`.
//! A [`ModeSuperposition`] over one axis, or over the product basis of a
//! rectangular box, is the analytic alternative to a gridded wavefunction:
//! `psi`, its gradient and the guidance velocity are evaluated in closed form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::GuidanceField;
use crate::grid::{Axis, Grid};
use crate::wavefunction::Wavefunction;

/// Highest quantum number supported along one axis.
pub const MAX_QUANTUM_NUMBER: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenBasis {
    length: f64,
}

impl EigenBasis {
    pub fn well(length: f64) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::param("length", format!("must be positive, got {length}")));
        }
        Ok(EigenBasis { length })
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn wavenumber(&self, n: u32) -> f64 {
        n as f64 * std::f64::consts::PI / self.length
    }

    #[inline]
    pub fn energy(&self, n: u32) -> f64 {
        let k = self.wavenumber(n);
        0.5 * k * k
    }

    #[inline]
    pub fn phi(&self, n: u32, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * (self.wavenumber(n) * x).sin()
    }

    #[inline]
    pub fn dphi(&self, n: u32, x: f64) -> f64 {
        let k = self.wavenumber(n);
        (2.0 / self.length).sqrt() * k * (k * x).cos()
    }

    /// Hard-walled grid over the well.
    pub fn axis(&self, points: usize) -> Result<Axis> {
        Axis::dirichlet(0.0, self.length, points)
    }

    /// `phi_n` sampled on a grid whose single axis spans the well.
    pub fn eigenstate(&self, n: u32, grid: &Grid) -> Result<Wavefunction> {
        if grid.dim() != 1 {
            return Err(Error::param("grid", "eigenstate needs a 1D grid"));
        }
        Wavefunction::from_fn(grid.clone(), |x| Complex64::new(self.phi(n, x[0]), 0.0))
    }
}

/// One term `amp * prod_d phi_{n_d}(x_d)` of a superposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub quantum: [u32; 2],
    pub amp: Complex64,
}

/// `psi(x, t) = sum_m amp_m e^{-i E_m t} phi_m(x)` in a 1D well or 2D box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSuperposition {
    axes: Vec<EigenBasis>,
    modes: Vec<Mode>,
    energies: Vec<f64>,
    n_max: [u32; 2],
    density_bound: f64,
}

impl ModeSuperposition {
    /// The modes are normalized to unit total weight.
    pub fn new(axes: Vec<EigenBasis>, mut modes: Vec<Mode>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::param("axes", "need 1 or 2 axes"));
        }
        if modes.is_empty() {
            return Err(Error::param("modes", "at least one mode required"));
        }
        let dim = axes.len();
        let mut n_max = [0u32; 2];
        for m in &modes {
            for d in 0..dim {
                let q = m.quantum[d];
                if q == 0 || q > MAX_QUANTUM_NUMBER {
                    return Err(Error::param("modes", format!("quantum number {q} outside 1..={MAX_QUANTUM_NUMBER}")));
                }
                n_max[d] = n_max[d].max(q);
            }
        }
        for i in 0..modes.len() {
            for j in 0..i {
                if modes[i].quantum[..dim] == modes[j].quantum[..dim] {
                    return Err(Error::param("modes", "repeated mode"));
                }
            }
        }
        let w: f64 = modes.iter().map(|m| m.amp.norm_sqr()).sum::<f64>().sqrt();
        if !(w > 0.0) {
            return Err(Error::param("modes", "all amplitudes vanish"));
        }
        modes.iter_mut().for_each(|m| m.amp /= w);
        let energies = modes
            .iter()
            .map(|m| (0..dim).map(|d| axes[d].energy(m.quantum[d])).sum())
            .collect();
        let norm_factor: f64 = axes.iter().map(|a| (2.0 / a.length).sqrt()).product();
        let amp_sum: f64 = modes.iter().map(|m| m.amp.norm()).sum();
        let density_bound = (amp_sum * norm_factor).powi(2);
        Ok(ModeSuperposition { axes, modes, energies, n_max, density_bound })
    }

    /// Equal-amplitude 1D superposition with the given phases.
    pub fn well_1d(basis: EigenBasis, quantum: &[u32], phases: &[f64]) -> Result<Self> {
        if quantum.len() != phases.len() {
            return Err(Error::param("phases", "one phase per mode"));
        }
        let modes = quantum
            .iter()
            .zip(phases)
            .map(|(&n, &p)| Mode { quantum: [n, 0], amp: Complex64::from_polar(1.0, p) })
            .collect();
        Self::new(vec![basis], modes)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[EigenBasis] {
        &self.axes
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Upper bound on `|psi|^2`, the node-clamp reference.
    pub fn density_bound(&self) -> f64 {
        self.density_bound
    }

    /// Lowest energy present.
    pub fn ground_energy(&self) -> f64 {
        self.energies.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `2 pi / E_min`, the unit in which relaxation runs are timed.
    pub fn natural_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.ground_energy()
    }

    /// Time-dependent coefficients `amp_m e^{-i E_m t}`.
    pub fn coefficients(&self, t: f64) -> Vec<Complex64> {
        self.modes.iter().zip(&self.energies).map(|(m, &e)| m.amp * Complex64::from_polar(1.0, -e * t)).collect()
    }

    /// `(psi, grad psi)` at `x` for the coefficients of one time.
    #[inline]
    pub fn evaluate(&self, coeffs: &[Complex64], x: &[f64]) -> (Complex64, [Complex64; 2]) {
        const SMALL: usize = 17;
        if self.n_max.iter().all(|&n| (n as usize) < SMALL) {
            self.evaluate_with::<SMALL>(coeffs, x)
        } else {
            self.evaluate_with::<{ MAX_QUANTUM_NUMBER as usize + 1 }>(coeffs, x)
        }
    }

    #[inline]
    fn evaluate_with<const N: usize>(&self, coeffs: &[Complex64], x: &[f64]) -> (Complex64, [Complex64; 2]) {
        let zero = Complex64::new(0.0, 0.0);
        let mut s = [[0.0f64; N]; 2];
        let mut c = [[0.0f64; N]; 2];
        let mut k1 = [0.0; 2];
        let mut norm = 1.0;
        for d in 0..self.dim() {
            let a = &self.axes[d];
            k1[d] = a.wavenumber(1);
            norm *= (2.0 / a.length).sqrt();
            sine_table(k1[d] * x[d], self.n_max[d] as usize, &mut s[d], &mut c[d]);
        }
        let mut psi = zero;
        let mut grad = [zero; 2];
        if self.dim() == 1 {
            for (m, &cf) in self.modes.iter().zip(coeffs) {
                let n = m.quantum[0] as usize;
                psi += cf * s[0][n];
                grad[0] += cf * (n as f64 * c[0][n]);
            }
        } else {
            for (m, &cf) in self.modes.iter().zip(coeffs) {
                let (a, b) = (m.quantum[0] as usize, m.quantum[1] as usize);
                let sa = s[0][a];
                let sb = s[1][b];
                psi += cf * (sa * sb);
                grad[0] += cf * (a as f64 * c[0][a] * sb);
                grad[1] += cf * (sa * b as f64 * c[1][b]);
            }
        }
        psi *= norm;
        grad[0] *= norm * k1[0];
        grad[1] *= norm * k1[1];
        (psi, grad)
    }

    pub fn psi(&self, x: &[f64], t: f64) -> Complex64 {
        self.evaluate(&self.coefficients(t), x).0
    }

    pub fn density(&self, x: &[f64], t: f64) -> f64 {
        self.psi(x, t).norm_sqr()
    }

    /// `Im(grad psi / psi)` at `(x, t)`.
    pub fn velocity_at(&self, x: &[f64], t: f64) -> [f64; 2] {
        let (psi, grad) = self.evaluate(&self.coefficients(t), x);
        let r = psi.norm_sqr();
        [(psi.conj() * grad[0]).im / r, (psi.conj() * grad[1]).im / r]
    }

    /// Hard-walled grid covering the box with `points` per axis.
    pub fn grid(&self, points: usize) -> Result<Grid> {
        Grid::new(self.axes.iter().map(|a| a.axis(points)).collect::<Result<Vec<_>>>()?)
    }

    /// Samples `psi(., t)` on `grid`.
    pub fn to_wavefunction(&self, grid: &Grid, t: f64) -> Result<Wavefunction> {
        if grid.dim() != self.dim() {
            return Err(Error::GridMismatch("superposition and grid dimensions differ".into()));
        }
        let coeffs = self.coefficients(t);
        let mut x = [0.0; 2];
        let amps = (0..grid.len())
            .map(|i| {
                grid.point(i, &mut x[..grid.dim()]);
                self.evaluate(&coeffs, &x).0
            })
            .collect();
        let mut psi = Wavefunction::new(grid.clone(), amps, t)?;
        psi.normalize()?;
        psi.set_time(t);
        Ok(psi)
    }
}

/// Fills `s[n] = sin(n th)`, `c[n] = cos(n th)` for `n = 0..=n_max` using the
/// angle-addition recurrence.
#[inline]
fn sine_table(theta: f64, n_max: usize, s: &mut [f64], c: &mut [f64]) {
    let (s1, c1) = theta.sin_cos();
    s[0] = 0.0;
    c[0] = 1.0;
    if n_max == 0 {
        return;
    }
    s[1] = s1;
    c[1] = c1;
    for n in 2..=n_max {
        s[n] = s[n - 1] * c1 + c[n - 1] * s1;
        c[n] = c[n - 1] * c1 - s[n - 1] * s1;
    }
}

/// Folds a small excursion past a wall back inside. The odd extension of
/// the wavefunction makes the flow mirror-symmetric about each wall, so the
/// reflected point is the true continuation.
#[inline]
pub(crate) fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        2.0 * lo - x
    } else if x > hi {
        2.0 * hi - x
    } else {
        x
    }
}

/// Time slice of a superposition: the phased coefficients.
pub struct CoefficientSlice {
    terms: Vec<Term>,
}

/// One mode with its phased coefficient and the gradient prefactors folded
/// in: `psi = sum c s_a s_b`, `d_x psi = sum ga c_a s_b`, `d_y psi = sum gb s_a c_b`.
struct Term {
    a: usize,
    b: usize,
    c: Complex64,
    ga: Complex64,
    gb: Complex64,
}

impl ModeSuperposition {
    fn slice_terms(&self, t: f64) -> CoefficientSlice {
        let norm: f64 = self.axes.iter().map(|a| (2.0 / a.length).sqrt()).product();
        let k1: Vec<f64> = self.axes.iter().map(|a| a.wavenumber(1)).collect();
        // e^{-i E_n t} per axis from E_n = n^2 E_1: z_n = z_{n-1} u_n, u_n = u_{n-1} w^2
        let mut phase = [[Complex64::new(1.0, 0.0); MAX_QUANTUM_NUMBER as usize + 1]; 2];
        for d in 0..self.dim() {
            let w = Complex64::from_polar(1.0, -self.axes[d].energy(1) * t);
            let w2 = w * w;
            let mut u = w;
            for n in 1..=self.n_max[d] as usize {
                phase[d][n] = phase[d][n - 1] * u;
                u *= w2;
            }
        }
        let terms = self
            .modes
            .iter()
            .map(|m| {
                let a = m.quantum[0] as usize;
                let (b, pb) = if self.dim() == 2 { (m.quantum[1] as usize, phase[1][m.quantum[1] as usize]) } else { (0, Complex64::new(1.0, 0.0)) };
                let c = m.amp * phase[0][a] * pb * norm;
                let gb = if self.dim() == 2 { c * (b as f64 * k1[1]) } else { Complex64::new(0.0, 0.0) };
                Term { a, b, c, ga: c * (a as f64 * k1[0]), gb }
            })
            .collect();
        CoefficientSlice { terms }
    }

    #[inline]
    fn evaluate_slice<const N: usize>(&self, slice: &CoefficientSlice, x: &[f64]) -> (Complex64, [Complex64; 2]) {
        let zero = Complex64::new(0.0, 0.0);
        let mut s = [[0.0f64; N]; 2];
        let mut c = [[0.0f64; N]; 2];
        for d in 0..self.dim() {
            let a = &self.axes[d];
            sine_table(a.wavenumber(1) * x[d], self.n_max[d] as usize, &mut s[d], &mut c[d]);
        }
        let mut psi = zero;
        let mut gx = zero;
        let mut gy = zero;
        if self.dim() == 1 {
            for t in &slice.terms {
                psi += t.c * s[0][t.a];
                gx += t.ga * c[0][t.a];
            }
        } else {
            for t in &slice.terms {
                let sa = s[0][t.a];
                let sb = s[1][t.b];
                psi += t.c * (sa * sb);
                gx += t.ga * (c[0][t.a] * sb);
                gy += t.gb * (sa * c[1][t.b]);
            }
        }
        (psi, [gx, gy])
    }
}

impl GuidanceField for ModeSuperposition {
    type Slice = CoefficientSlice;

    fn dim(&self) -> usize {
        self.axes.len()
    }

    fn slice(&self, t: f64) -> Self::Slice {
        self.slice_terms(t)
    }

    #[inline]
    fn velocity(&self, slice: &Self::Slice, x: &[f64], v: &mut [f64]) -> f64 {
        const SMALL: usize = 17;
        let (psi, grad) = if self.n_max.iter().all(|&n| (n as usize) < SMALL) {
            self.evaluate_slice::<SMALL>(slice, x)
        } else {
            self.evaluate_slice::<{ MAX_QUANTUM_NUMBER as usize + 1 }>(slice, x)
        };
        let r = psi.norm_sqr();
        for d in 0..self.dim() {
            v[d] = (psi.conj() * grad[d]).im / r;
        }
        r / self.density_bound
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.axes.iter().zip(x).all(|(a, &xi)| (0.0..=a.length).contains(&xi))
    }

    fn confine(&self, x: &mut [f64]) -> bool {
        for (a, xi) in self.axes.iter().zip(x.iter_mut()) {
            *xi = reflect(*xi, 0.0, a.length);
        }
        self.contains(x)
    }

    fn spacing(&self) -> f64 {
        // analytic field: a quarter of the shortest half-wavelength present
        self.axes
            .iter()
            .zip(self.n_max)
            .map(|(a, n)| a.length / (4.0 * n as f64))
            .fold(f64::INFINITY, f64::min)
    }

    fn span(&self) -> f64 {
        self.axes.iter().map(|a| a.length).fold(0.0, f64::max)
    }
}

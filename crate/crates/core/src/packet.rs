//! Free Gaussian wavepackets in closed form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::GuidanceField;
use crate::grid::Grid;
use crate::wavefunction::Wavefunction;

/// A free Gaussian packet in one dimension: `|psi(x, 0)|^2` is normal with
/// mean `center` and standard deviation `sigma`, and the packet carries
/// mean momentum `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub center: f64,
    pub sigma: f64,
    pub k: f64,
}

impl GaussianPacket {
    pub fn new(center: f64, sigma: f64, k: f64) -> Result<Self> {
        if !(sigma > 0.0) || !center.is_finite() || !k.is_finite() {
            return Err(Error::param("packet", "need sigma > 0 and finite center and momentum"));
        }
        Ok(GaussianPacket { center, sigma, k })
    }

    /// Width of `|psi(., t)|^2`: `sigma sqrt(1 + t^2 / (4 sigma^4))`.
    pub fn width(&self, t: f64) -> f64 {
        self.sigma * (1.0 + t * t / (4.0 * self.sigma.powi(4))).sqrt()
    }

    pub fn mean(&self, t: f64) -> f64 {
        self.center + self.k * t
    }

    pub fn psi(&self, x: f64, t: f64) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        let spread = Complex64::new(1.0, t / (2.0 * s2));
        let u = x - self.mean(t);
        let norm = (2.0 * std::f64::consts::PI * s2).powf(-0.25);
        let env = (-(u * u) / (4.0 * s2 * spread)).exp();
        let phase = Complex64::from_polar(1.0, self.k * (x - self.center) - 0.5 * self.k * self.k * t);
        norm / spread.sqrt() * env * phase
    }

    pub fn density(&self, x: f64, t: f64) -> f64 {
        let s = self.width(t);
        let z = (x - self.mean(t)) / s;
        (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// `k + (x - center - k t) t / (t^2 + 4 sigma^4)`.
    #[inline]
    pub fn velocity_at(&self, x: f64, t: f64) -> f64 {
        self.k + (x - self.mean(t)) * t / (t * t + 4.0 * self.sigma.powi(4))
    }

    /// The exact guidance path from `x0` at `t = 0`.
    pub fn path(&self, x0: f64, t: f64) -> f64 {
        self.mean(t) + (x0 - self.center) * self.width(t) / self.sigma
    }

    /// `<self|other>` at equal times, in closed form.
    pub fn overlap(&self, other: &GaussianPacket) -> Result<Complex64> {
        if (self.sigma - other.sigma).abs() > 1e-15 * self.sigma {
            return Err(Error::param("packet", "closed-form overlap needs equal widths"));
        }
        let s2 = self.sigma * self.sigma;
        let d = other.center - self.center;
        let dk = other.k - self.k;
        let mid = 0.5 * (self.center + other.center);
        let mag = (-d * d / (8.0 * s2) - dk * dk * s2 / 2.0).exp();
        let phase = dk * mid - other.k * other.center + self.k * self.center;
        Ok(Complex64::from_polar(mag, phase))
    }

    pub fn to_wavefunction(&self, grid: &Grid, t: f64) -> Result<Wavefunction> {
        if grid.dim() != 1 {
            return Err(Error::GridMismatch("packets are one-dimensional".into()));
        }
        let amps = grid.axis(0).points().into_iter().map(|x| self.psi(x, t)).collect();
        Wavefunction::new(grid.clone(), amps, t)
    }
}

impl GuidanceField for GaussianPacket {
    type Slice = f64;

    fn dim(&self) -> usize {
        1
    }

    fn slice(&self, t: f64) -> f64 {
        t
    }

    #[inline]
    fn velocity(&self, t: &f64, x: &[f64], v: &mut [f64]) -> f64 {
        v[0] = self.velocity_at(x[0], *t);
        f64::INFINITY
    }

    fn contains(&self, x: &[f64]) -> bool {
        x[0].is_finite()
    }

    fn spacing(&self) -> f64 {
        0.25 * self.sigma
    }

    fn span(&self) -> f64 {
        20.0 * self.sigma
    }
}

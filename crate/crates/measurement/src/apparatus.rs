use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use subquantum_core::stats;
use subquantum_core::{Error, Result};

/// Shape of the pointer's initial position distribution `pi0(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PointerShape {
    /// Uniform on `[-w/2, w/2]`: nonequilibrium whenever `w` differs from
    /// the quantum width.
    #[default]
    Uniform,
    /// `pi0 = |g0|^2`, normal with standard deviation `delta`: the
    /// equilibrium control.
    Equilibrium,
}

/// A pointer `y` coupled to the system by `H = a x p_y` for a duration `t`.
///
/// The quantum pointer state `g0(y)` is a real Gaussian with `|g0|^2` of
/// standard deviation `delta`; the actual pointer position is drawn from
/// `pi0`, which need not equal `|g0|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointerApparatus {
    pub coupling: f64,
    pub duration: f64,
    pub width: f64,
    pub delta: f64,
    #[serde(default)]
    pub shape: PointerShape,
}

impl PointerApparatus {
    /// Uniform pointer with the quantum width `delta = 10 w`.
    pub fn new(coupling: f64, duration: f64, width: f64) -> Result<Self> {
        let app = PointerApparatus { coupling, duration, width, delta: 10.0 * width, shape: PointerShape::Uniform };
        app.validate()?;
        Ok(app)
    }

    /// Uniform pointer of width `2 at resolution` with `at = 1`.
    pub fn with_resolution(resolution: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 2.0 * resolution)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_shape(mut self, shape: PointerShape) -> Self {
        self.shape = shape;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupling * self.duration > 0.0) || !self.coupling.is_finite() || !self.duration.is_finite() {
            return Err(Error::param("apparatus", "need a t > 0"));
        }
        if !(self.width > 0.0) || !self.width.is_finite() {
            return Err(Error::param("width", "must be positive"));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::param("delta", "must be positive"));
        }
        Ok(())
    }

    /// `a t`.
    pub fn strength(&self) -> f64 {
        self.coupling * self.duration
    }

    /// Half-width of the inferred interval, `w / (2 a t)`.
    pub fn resolution(&self) -> f64 {
        self.width / (2.0 * self.strength())
    }

    /// True when the pointer is wider than its quantum state, so the
    /// inference is less accurate than a quantum measurement.
    pub fn worse_than_quantum(&self) -> bool {
        self.width > self.delta
    }

    /// Whether `x0` is guaranteed to lie in every inferred interval: true
    /// for the compactly supported uniform pointer only.
    pub fn interval_guaranteed(&self) -> bool {
        self.shape == PointerShape::Uniform
    }

    /// Draws an initial pointer position from `pi0`.
    pub fn draw_start<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.shape {
            PointerShape::Uniform => self.width * (rng.random::<f64>() - 0.5),
            PointerShape::Equilibrium => Normal::new(0.0, self.delta).expect("valid delta").sample(rng),
        }
    }

    /// Distribution function of `pi0`.
    pub fn start_cdf(&self, y: f64) -> f64 {
        match self.shape {
            PointerShape::Uniform => (y / self.width + 0.5).clamp(0.0, 1.0),
            PointerShape::Equilibrium => stats::normal_cdf(y / self.delta),
        }
    }

    /// Half-width of the region holding all (or, for the normal shape,
    /// all but about 1e-15) of `pi0`.
    pub fn start_reach(&self) -> f64 {
        match self.shape {
            PointerShape::Uniform => 0.5 * self.width,
            PointerShape::Equilibrium => 8.0 * self.delta,
        }
    }

    /// The quantum pointer amplitude `g0(y)`, real and normalized.
    pub fn amplitude(&self, y: f64) -> f64 {
        let d2 = self.delta * self.delta;
        (2.0 * std::f64::consts::PI * d2).powf(-0.25) * (-y * y / (4.0 * d2)).exp()
    }
}

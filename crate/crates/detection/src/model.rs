//! Radial parent densities for the ground-state cloud, in units of the Bohr
//! radius.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use subquantum_core::stats;
use subquantum_core::{Error, Result};

/// Mean radius under `p_eq`.
pub const MU_EQ: f64 = 1.5;
/// Radial variance under `p_eq`: `<r^2>_eq - MU_EQ^2 = 3 - 9/4`.
pub const VAR_EQ: f64 = 0.75;

/// `p_eq(r) = 4 r^2 e^{-2r}`.
#[inline]
pub fn pdf_eq(r: f64) -> f64 {
    if r < 0.0 {
        0.0
    } else {
        4.0 * r * r * (-2.0 * r).exp()
    }
}

/// `1 - e^{-2r}(1 + 2r + 2r^2)`.
#[inline]
pub fn cdf_eq(r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let u = 2.0 * r;
    if u < 1e-3 {
        // series avoids cancellation: u^3/6 - u^4/8 + u^5/20
        return u * u * u * (1.0 / 6.0 - u / 8.0 + u * u / 20.0);
    }
    1.0 - (-u).exp() * (1.0 + u + 0.5 * u * u)
}

/// Inverse of `cdf_eq`: bisection on a doubling bracket, then Newton
/// polish.
pub fn quantile_eq(p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while cdf_eq(hi) < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if cdf_eq(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..2 {
        let d = pdf_eq(r);
        if d > 0.0 {
            r -= (cdf_eq(r) - p) / d;
        }
    }
    r
}

/// A candidate or true parent density over the radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RadialParent {
    /// `p_eq`.
    Equilibrium,
    /// `p_lambda(r) = lambda p_eq(lambda r)`.
    Scaled { lambda: f64 },
    /// Heavy-tailed Lomax density `alpha/s (1 + r/s)^{-alpha-1}`; its
    /// variance is undefined for `alpha <= 2`.
    Lomax { alpha: f64, scale: f64 },
    /// A scaled parent relaxing toward equilibrium,
    /// `lambda(t) = 1 + (lambda0 - 1) e^{-t/tau}`, observed at one instant.
    Relaxing { lambda0: f64, tau: f64, observed_at: f64 },
}

impl RadialParent {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RadialParent::Equilibrium => true,
            RadialParent::Scaled { lambda } => lambda > 0.0 && lambda.is_finite(),
            RadialParent::Lomax { alpha, scale } => alpha > 0.0 && scale > 0.0 && alpha.is_finite() && scale.is_finite(),
            RadialParent::Relaxing { lambda0, tau, observed_at } => lambda0 > 0.0 && tau > 0.0 && observed_at >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param("parent", format!("invalid parameters in {self:?}")))
        }
    }

    /// True if the parent does not change with time.
    pub fn is_static(&self) -> bool {
        !matches!(self, RadialParent::Relaxing { .. })
    }

    /// The scale parameter, for members of the scaled family.
    pub fn lambda(&self) -> Option<f64> {
        match *self {
            RadialParent::Equilibrium => Some(1.0),
            RadialParent::Scaled { lambda } => Some(lambda),
            RadialParent::Relaxing { lambda0, tau, observed_at } => Some(1.0 + (lambda0 - 1.0) * (-observed_at / tau).exp()),
            RadialParent::Lomax { .. } => None,
        }
    }

    pub fn pdf(&self, r: f64) -> f64 {
        match *self {
            RadialParent::Lomax { alpha, scale } => {
                if r < 0.0 {
                    0.0
                } else {
                    alpha / scale * (1.0 + r / scale).powf(-alpha - 1.0)
                }
            }
            _ => {
                let l = self.lambda().expect("scaled family");
                l * pdf_eq(l * r)
            }
        }
    }

    pub fn cdf(&self, r: f64) -> f64 {
        match *self {
            RadialParent::Lomax { alpha, scale } => {
                if r <= 0.0 {
                    0.0
                } else {
                    1.0 - (1.0 + r / scale).powf(-alpha)
                }
            }
            _ => cdf_eq(self.lambda().expect("scaled family") * r),
        }
    }

    /// Draws one radius.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RadialParent::Lomax { alpha, scale } => {
                let u: f64 = rng.random();
                scale * ((1.0 - u).powf(-1.0 / alpha) - 1.0)
            }
            _ => {
                // r ~ Gamma(3, scale 1/(2 lambda))
                let l = self.lambda().expect("scaled family");
                Gamma::new(3.0, 0.5 / l).expect("valid gamma").sample(rng)
            }
        }
    }

    /// Mean and variance by quadrature; `UndefinedVariance` when the second
    /// moment does not converge.
    pub fn moments(&self) -> Result<(f64, f64)> {
        self.validate()?;
        let m0 = moment(|r| self.pdf(r), 0)?;
        let m1 = moment(|r| self.pdf(r), 1)? / m0;
        let m2 = moment(|r| self.pdf(r), 2)? / m0;
        let var = m2 - m1 * m1;
        if !(var > 0.0) || !var.is_finite() {
            return Err(Error::UndefinedVariance);
        }
        Ok((m1, var))
    }
}

/// `int_0^inf r^k p(r) dr` on a logarithmic variable, extending the upper
/// limit until the value settles.
fn moment(p: impl Fn(f64) -> f64, k: i32) -> Result<f64> {
    let g = |s: f64| {
        let r = s.exp();
        r.powi(k + 1) * p(r)
    };
    let mut hi = -40.0_f64;
    let mut total = 0.0;
    while hi < 4.0 {
        total += stats::integrate(&g, hi, hi + 1.0, 1e-15);
        hi += 1.0;
    }
    for _ in 0..60 {
        let next = hi + 1.0;
        let piece = stats::integrate(&g, hi, next, 1e-15);
        total += piece;
        hi = next;
        if piece.abs() <= 1e-13 * total.abs() && g(hi) <= 1e-13 * total.abs() {
            return Ok(total);
        }
    }
    Err(Error::UndefinedVariance)
}

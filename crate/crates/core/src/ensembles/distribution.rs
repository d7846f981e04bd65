//! Declarative initial distributions and i.i.d. sampling from them.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::density::TabulatedDensity;
use super::Ensemble;
use crate::error::{Error, Result};
use crate::field::NodeClamp;
use crate::rng;
use crate::wavefunction::Wavefunction;

/// Largest mass a distribution may put where `|psi0|^2` vanishes.
pub const SUPPORT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    /// `|psi0|^2`.
    Equilibrium,
    /// Product of normals, truncated to the domain.
    Gaussian { mean: Vec<f64>, sigma: Vec<f64> },
    /// Uniform on the box `[lo, hi]`.
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
    /// `|psi0|^(2 beta)`, normalized; `beta > 1` narrows the equilibrium.
    ScaledEquilibrium { beta: f64 },
    Mixture { components: Vec<MixtureComponent> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub spec: DistributionSpec,
}

/// A spec bound to a domain and a reference `|psi0|^2`, ready to sample.
pub(crate) enum Prepared {
    Tabulated(TabulatedDensity),
    Gaussian { normals: Vec<(Normal, f64, f64)> },
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
    Mixture { cum: Vec<f64>, parts: Vec<Prepared> },
}

impl DistributionSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            DistributionSpec::Equilibrium => Ok(()),
            DistributionSpec::Gaussian { mean, sigma } => {
                if mean.len() != dim || sigma.len() != dim {
                    return Err(Error::param("gaussian", format!("need {dim} means and widths")));
                }
                if sigma.iter().any(|s| !(*s > 0.0)) || mean.iter().any(|m| !m.is_finite()) {
                    return Err(Error::param("gaussian", "widths must be positive, means finite"));
                }
                Ok(())
            }
            DistributionSpec::Uniform { lo, hi } => {
                if lo.len() != dim || hi.len() != dim || lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
                    return Err(Error::param("uniform", format!("need {dim} intervals with lo < hi")));
                }
                Ok(())
            }
            DistributionSpec::ScaledEquilibrium { beta } => {
                if !(*beta > 0.0) || !beta.is_finite() {
                    return Err(Error::param("beta", "must be positive"));
                }
                Ok(())
            }
            DistributionSpec::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::param("mixture", "needs at least one component"));
                }
                if components.iter().any(|c| !(c.weight > 0.0)) {
                    return Err(Error::param("mixture", "weights must be positive"));
                }
                components.iter().try_for_each(|c| c.spec.validate(dim))
            }
        }
    }

    /// Unnormalized density at `x` given the reference `|psi0|^2` at `x`.
    fn raw_density(&self, x: &[f64], q: f64) -> f64 {
        match self {
            DistributionSpec::Equilibrium => q,
            DistributionSpec::ScaledEquilibrium { beta } => q.powf(*beta),
            DistributionSpec::Gaussian { mean, sigma } => {
                x.iter().zip(mean).zip(sigma).map(|((x, m), s)| (-(x - m).powi(2) / (2.0 * s * s)).exp() / s).product()
            }
            DistributionSpec::Uniform { lo, hi } => {
                let inside = x.iter().zip(lo).zip(hi).all(|((x, a), b)| x >= a && x <= b);
                if inside {
                    1.0 / lo.iter().zip(hi).map(|(a, b)| b - a).product::<f64>()
                } else {
                    0.0
                }
            }
            DistributionSpec::Mixture { components } => {
                let w: f64 = components.iter().map(|c| c.weight).sum();
                components.iter().map(|c| c.weight / w * c.spec.raw_density(x, q)).sum()
            }
        }
    }

    /// The density this spec defines relative to `born`, tabulated on the
    /// same lattice (normalized).
    pub fn tabulate(&self, born: &TabulatedDensity) -> Result<TabulatedDensity> {
        self.validate(born.dim())?;
        let born_vals = born.values();
        let mut x = [0.0; 2];
        let axes = born.axes().to_vec();
        let mut idx = 0;
        let mut vals = Vec::with_capacity(born_vals.len());
        match axes.as_slice() {
            [a] => {
                for i in 0..a.nodes {
                    x[0] = a.node(i);
                    vals.push(self.raw_density(&x[..1], born_vals[i]));
                }
            }
            [a, b] => {
                for i in 0..a.nodes {
                    for j in 0..b.nodes {
                        x[0] = a.node(i);
                        x[1] = b.node(j);
                        vals.push(self.raw_density(&x, born_vals[idx]));
                        idx += 1;
                    }
                }
            }
            _ => unreachable!(),
        }
        TabulatedDensity::new(axes, vals)
    }

    /// Mass of the spec lying in lattice cells where `|psi0|^2` vanishes
    /// (all corners below the node threshold).
    pub fn mass_outside_support(&self, born: &TabulatedDensity) -> Result<f64> {
        let rho = self.tabulate(born)?;
        let q = born.values();
        let qmax = q.iter().cloned().fold(0.0, f64::max);
        let thr = NodeClamp::DEFAULT_EPS_NODE * qmax;
        let axes = born.axes();
        let mut out = 0.0;
        match axes {
            [a] => {
                for j in 0..a.segments() {
                    if q[j] < thr && q[j + 1] < thr {
                        out += rho.box_mass(&[(j, j + 1)]);
                    }
                }
            }
            [a, b] => {
                let ny = b.nodes;
                for i in 0..a.segments() {
                    for j in 0..b.segments() {
                        let c = [q[i * ny + j], q[i * ny + j + 1], q[(i + 1) * ny + j], q[(i + 1) * ny + j + 1]];
                        if c.iter().all(|&v| v < thr) {
                            out += rho.box_mass(&[(i, i + 1), (j, j + 1)]);
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        Ok(out)
    }

    pub(crate) fn prepare(&self, born: &TabulatedDensity) -> Result<Prepared> {
        self.validate(born.dim())?;
        let bounds: Vec<(f64, f64)> = born.axes().iter().map(|a| (a.lo, a.hi())).collect();
        Ok(match self {
            DistributionSpec::Equilibrium => Prepared::Tabulated(born.clone()),
            DistributionSpec::ScaledEquilibrium { .. } => Prepared::Tabulated(self.tabulate(born)?),
            DistributionSpec::Gaussian { mean, sigma } => {
                let mut normals = Vec::new();
                for ((&m, &s), &(lo, hi)) in mean.iter().zip(sigma).zip(&bounds) {
                    let n = Normal::new(m, s).map_err(|e| Error::param("gaussian", e.to_string()))?;
                    let (a, b) = (n.cdf(lo), n.cdf(hi));
                    if !(b > a) {
                        return Err(Error::OutsideSupport { mass: 1.0 });
                    }
                    normals.push((n, a, b));
                }
                Prepared::Gaussian { normals }
            }
            DistributionSpec::Uniform { lo, hi } => {
                if lo.iter().zip(hi).zip(&bounds).any(|((a, b), &(l, h))| *a < l || *b > h) {
                    return Err(Error::param("uniform", "box extends beyond the domain"));
                }
                Prepared::Uniform { lo: lo.clone(), hi: hi.clone() }
            }
            DistributionSpec::Mixture { components } => {
                let w: f64 = components.iter().map(|c| c.weight).sum();
                let mut acc = 0.0;
                let cum = components
                    .iter()
                    .map(|c| {
                        acc += c.weight / w;
                        acc
                    })
                    .collect();
                let parts = components.iter().map(|c| c.spec.prepare(born)).collect::<Result<_>>()?;
                Prepared::Mixture { cum, parts }
            }
        })
    }
}

impl Prepared {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [f64]) {
        match self {
            Prepared::Tabulated(t) => t.sample_into(rng, x),
            Prepared::Gaussian { normals } => {
                for (xi, (n, a, b)) in x.iter_mut().zip(normals) {
                    let u: f64 = rng.random();
                    *xi = n.inverse_cdf(a + u * (b - a));
                }
            }
            Prepared::Uniform { lo, hi } => {
                for ((xi, a), b) in x.iter_mut().zip(lo).zip(hi) {
                    *xi = a + rng.random::<f64>() * (b - a);
                }
            }
            Prepared::Mixture { cum, parts } => {
                let u: f64 = rng.random();
                let k = cum.partition_point(|&c| c <= u).min(parts.len() - 1);
                parts[k].draw(rng, x);
            }
        }
    }
}

/// Draws `n` i.i.d. points from `spec` relative to the reference density
/// `born` (normally `|psi0|^2`). Deterministic given `seed`, independent of
/// the thread count.
pub fn sample_from(spec: &DistributionSpec, born: &TabulatedDensity, n: usize, seed: u64, time: f64) -> Result<Ensemble> {
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let outside = spec.mass_outside_support(born)?;
    if outside > SUPPORT_TOLERANCE {
        return Err(Error::OutsideSupport { mass: outside });
    }
    let prepared = spec.prepare(born)?;
    let dim = born.dim();
    let mut points = vec![0.0; n * dim];
    points.par_chunks_mut(rng::BLOCK * dim).enumerate().for_each(|(b, block)| {
        let mut r = rng::stream(seed, b as u64);
        for p in block.chunks_exact_mut(dim) {
            prepared.draw(&mut r, p);
        }
    });
    Ok(Ensemble { dim, points, time, spec: Some(spec.clone()), seed: Some(seed) })
}

/// Samples relative to `|psi0|^2` of a gridded wavefunction.
pub fn sample(spec: &DistributionSpec, psi0: &Wavefunction, n: usize, seed: u64) -> Result<Ensemble> {
    psi0.check_normalized()?;
    let born = TabulatedDensity::born(psi0)?;
    sample_from(spec, &born, n, seed, psi0.time())
}

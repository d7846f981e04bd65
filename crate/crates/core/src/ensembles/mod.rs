//! Particle ensembles: sampling, transport along trajectories, and
//! coarse-grained comparison with `|psi|^2`.

pub mod coarse;
pub mod compare;
pub mod density;
pub mod distribution;
pub mod relaxation;

pub use coarse::{h_function, CoarseGraining, MIN_PARTICLES};
pub use compare::{compare, Comparison};
pub use density::{NodeAxis, TabulatedDensity};
pub use distribution::{sample, sample_from, DistributionSpec, MixtureComponent};

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::trajectory::{evolve, Guide, PropagatedGuide, StepOptions, StepStats};
use crate::wavefunction::Wavefunction;

/// `n` configuration points in `dim` dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub(crate) dim: usize,
    pub(crate) points: Vec<f64>,
    pub(crate) time: f64,
    pub(crate) spec: Option<DistributionSpec>,
    pub(crate) seed: Option<u64>,
}

impl Ensemble {
    pub fn new(dim: usize, points: Vec<f64>, time: f64) -> Result<Self> {
        if dim == 0 || dim > 2 || points.len() % dim != 0 {
            return Err(Error::param("points", "need 1 or 2 coordinates per point"));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("points", "coordinates must be finite"));
        }
        Ok(Ensemble { dim, points, time, spec: None, seed: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn spec(&self) -> Option<&DistributionSpec> {
        self.spec.as_ref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Coordinates along axis `d`.
    pub fn coordinate(&self, d: usize) -> Vec<f64> {
        self.points.chunks_exact(self.dim).map(|p| p[d]).collect()
    }

    /// Columnar text: a comment header then one point per line.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.points.len() * 24);
        let _ = writeln!(s, "# ensemble dim={} n={} time={}", self.dim, self.len(), self.time);
        let names = ["x", "y"];
        let _ = writeln!(s, "# {}", names[..self.dim].join(" "));
        for p in self.points.chunks_exact(self.dim) {
            let row: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty ensemble file".into()))?;
        let field = |key: &str| -> Result<&str> {
            header
                .split_whitespace()
                .find_map(|w| w.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .ok_or_else(|| Error::Parse(format!("ensemble header lacks {key}")))
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(e.to_string()));
        let dim: usize = field("dim")?.parse().map_err(|_| Error::Parse("bad dim".into()))?;
        let time = num(field("time")?)?;
        let mut points = Vec::new();
        for line in lines.filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
            let before = points.len();
            for w in line.split_whitespace() {
                points.push(num(w)?);
            }
            if points.len() - before != dim {
                return Err(Error::Parse(format!("expected {dim} columns in line {line:?}")));
            }
        }
        Self::new(dim, points, time)
    }
}

/// Moves every particle of `ens` along its guidance trajectory to `t_end`,
/// calling `on_sample` at each sample time with the ensemble at that time.
pub fn transport_with<G: Guide>(
    ens: &Ensemble,
    guide: &mut G,
    t_end: f64,
    opts: &StepOptions,
    sample_times: &[f64],
    mut on_sample: impl FnMut(&Ensemble) -> Result<()>,
) -> Result<(Ensemble, StepStats)> {
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if guide.dim() != ens.dim {
        return Err(Error::GridMismatch("ensemble and guide differ in dimension".into()));
    }
    if (guide.time() - ens.time).abs() > 1e-9 * (1.0 + ens.time.abs()) {
        return Err(Error::param("time", "ensemble and guide start at different times"));
    }
    let mut out = ens.clone();
    let stats = evolve(guide, &mut out.points, t_end, opts, sample_times, |t, pts, _| {
        let snap = Ensemble { dim: ens.dim, points: pts.to_vec(), time: t, spec: ens.spec.clone(), seed: ens.seed };
        on_sample(&snap)
    })?;
    out.time = t_end;
    Ok((out, stats))
}

/// Transports `ens` through the Schrodinger evolution of `psi0` under
/// `potential` to `t_final`.
pub fn transport(ens: &Ensemble, psi0: &Wavefunction, potential: &Potential, t_final: f64, opts: &StepOptions) -> Result<(Ensemble, StepStats)> {
    let mut guide = PropagatedGuide::new(psi0.clone(), potential, opts.dt)?;
    transport_with(ens, &mut guide, t_final, opts, &[], |_| Ok(()))
}

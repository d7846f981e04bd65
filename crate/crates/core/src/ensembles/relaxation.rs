//! The well relaxation experiment: an ensemble guided by a multi-mode box
//! superposition, compared with `|psi(t)|^2` on several coarse-grainings.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::coarse::CoarseGraining;
use super::compare::{compare, Comparison};
use super::density::{NodeAxis, TabulatedDensity};
use super::distribution::{sample_from, DistributionSpec};
use super::{transport_with, Ensemble};
use crate::basis::{EigenBasis, Mode, ModeSuperposition};
use crate::error::{Error, Result};
use crate::rng;
use crate::trajectory::{AnalyticGuide, StepOptions, StepStats};

const PHASE_STREAM: u64 = 0x7068_6173;

/// Equal-amplitude superposition of the lowest modes of a box `[0, L]^dim`
/// with seeded random phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WellScenario {
    pub dim: usize,
    pub length: f64,
    /// Quantum numbers `1..=modes_per_axis` on every axis, so the state has
    /// `modes_per_axis^dim` modes.
    pub modes_per_axis: u32,
    pub phase_seed: u64,
    /// Grid points per axis; coarse cells must hold at least four of them.
    pub grid_points: usize,
}

impl Default for WellScenario {
    fn default() -> Self {
        WellScenario { dim: 2, length: std::f64::consts::PI, modes_per_axis: 4, phase_seed: 0, grid_points: 64 }
    }
}

impl WellScenario {
    pub fn superposition(&self) -> Result<ModeSuperposition> {
        if self.dim == 0 || self.dim > 2 {
            return Err(Error::param("dim", "must be 1 or 2"));
        }
        if self.modes_per_axis == 0 {
            return Err(Error::param("modes_per_axis", "must be positive"));
        }
        let basis = EigenBasis::well(self.length)?;
        let mut r = rng::stream(rng::derive(self.phase_seed, PHASE_STREAM), 0);
        let mut modes = Vec::new();
        let m = self.modes_per_axis;
        let mut push = |q: [u32; 2], r: &mut rand_chacha::ChaCha8Rng| {
            let phase = 2.0 * std::f64::consts::PI * r.random::<f64>();
            modes.push(Mode { quantum: q, amp: Complex64::from_polar(1.0, phase) });
        };
        if self.dim == 1 {
            for i in 1..=m {
                push([i, 0], &mut r);
            }
        } else {
            for i in 1..=m {
                for j in 1..=m {
                    push([i, j], &mut r);
                }
            }
        }
        ModeSuperposition::new(vec![basis; self.dim], modes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxationConfig {
    pub scenario: WellScenario,
    pub particles: usize,
    /// Run length in natural periods `2 pi / E_min`.
    pub periods: f64,
    pub samples_per_period: usize,
    pub dt: f64,
    pub stage_tolerance: f64,
    pub cells: Vec<usize>,
    /// Cell count at which the decay criterion is judged.
    pub judged_cells: usize,
    /// Segments per axis of the tabulated `|psi(t)|^2` reference.
    pub reference_segments: usize,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        RelaxationConfig {
            scenario: WellScenario::default(),
            particles: 100_000,
            periods: 10.0,
            samples_per_period: 1,
            dt: 0.05,
            stage_tolerance: 0.5,
            cells: vec![16, 32, 64],
            judged_cells: 32,
            reference_segments: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxationSample {
    pub time: f64,
    pub periods: f64,
    /// One comparison per configured cell count, in order.
    pub comparisons: Vec<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxationReport {
    pub natural_period: f64,
    pub cells: Vec<usize>,
    pub samples: Vec<RelaxationSample>,
    pub stats: StepStats,
}

impl RelaxationReport {
    fn column(&self, cells: usize) -> Option<usize> {
        self.cells.iter().position(|&c| c == cells)
    }

    /// H-function series at the given cell count.
    pub fn h_series(&self, cells: usize) -> Option<Vec<f64>> {
        let k = self.column(cells)?;
        Some(self.samples.iter().map(|s| s.comparisons[k].h).collect())
    }

    pub fn tv_series(&self, cells: usize) -> Option<Vec<f64>> {
        let k = self.column(cells)?;
        Some(self.samples.iter().map(|s| s.comparisons[k].total_variation).collect())
    }

    /// Whether the H series never rises by more than `tol * H(0)` between
    /// consecutive samples.
    pub fn h_non_increasing(&self, cells: usize, tol: f64) -> Option<bool> {
        let h = self.h_series(cells)?;
        let slack = tol * h[0].abs();
        Some(h.windows(2).all(|w| w[1] <= w[0] + slack))
    }

    /// `H(t_final) / H(0)`.
    pub fn h_ratio(&self, cells: usize) -> Option<f64> {
        let h = self.h_series(cells)?;
        Some(h[h.len() - 1] / h[0])
    }

    /// Columnar text: time, periods, then TV and H per cell count.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# time periods");
        for c in &self.cells {
            s.push_str(&format!(" tv_{c} h_{c}"));
        }
        s.push_str(" ks ks_p\n");
        for r in &self.samples {
            s.push_str(&format!("{:e} {:e}", r.time, r.periods));
            for c in &r.comparisons {
                s.push_str(&format!(" {:e} {:e}", c.total_variation, c.h));
            }
            let last = &r.comparisons[r.comparisons.len() - 1];
            s.push_str(&format!(" {:e} {:e}\n", last.ks, last.ks_p));
        }
        s
    }
}

impl RelaxationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles < super::coarse::MIN_PARTICLES {
            return Err(Error::SampleTooSmall { got: self.particles, need: super::coarse::MIN_PARTICLES });
        }
        if !(self.periods >= 0.0) || self.samples_per_period == 0 {
            return Err(Error::param("periods", "need a nonnegative length and at least one sample per period"));
        }
        if !self.cells.contains(&self.judged_cells) {
            return Err(Error::param("judged_cells", "must be one of the configured cell counts"));
        }
        Ok(())
    }

    /// Sample times in natural periods.
    pub fn sample_periods(&self) -> Vec<f64> {
        let k = (self.periods * self.samples_per_period as f64).round() as usize;
        (0..=k).map(|i| i as f64 / self.samples_per_period as f64).collect()
    }
}

/// The tabulated `|psi(t)|^2` of `sup` with `segments` per axis.
pub fn born_table(sup: &ModeSuperposition, t: f64, segments: usize) -> Result<TabulatedDensity> {
    let axes = sup
        .axes()
        .iter()
        .map(|b| NodeAxis::new(0.0, b.length(), segments))
        .collect::<Result<Vec<_>>>()?;
    TabulatedDensity::from_fn(axes, |x| sup.density(x, t))
}

/// Samples `spec` relative to `|psi(0)|^2`, transports it through the
/// scenario and compares it with `|psi(t)|^2` at every sample time.
pub fn run_relaxation(cfg: &RelaxationConfig, spec: &DistributionSpec, seed: u64) -> Result<RelaxationReport> {
    cfg.validate()?;
    let sup = cfg.scenario.superposition()?;
    let grid = sup.grid(cfg.scenario.grid_points)?;
    let cgs = cfg.cells.iter().map(|&c| CoarseGraining::with_total(&grid, c)).collect::<Result<Vec<_>>>()?;
    let period = sup.natural_period();
    let ens = sample_from(spec, &born_table(&sup, 0.0, cfg.reference_segments)?, cfg.particles, seed, 0.0)?;
    let sample_periods = cfg.sample_periods();
    let times: Vec<f64> = sample_periods.iter().map(|p| p * period).collect();
    let t_end = times[times.len() - 1];
    let mut opts = StepOptions::new(cfg.dt);
    opts.stage_tolerance = cfg.stage_tolerance;
    let mut guide = AnalyticGuide::new(sup.clone(), 0.0);
    let mut samples = Vec::new();
    let record = |e: &Ensemble, samples: &mut Vec<RelaxationSample>| -> Result<()> {
        let reference = born_table(&sup, e.time(), cfg.reference_segments)?;
        let comparisons = cgs.iter().map(|cg| compare(e, &reference, cg)).collect::<Result<Vec<_>>>()?;
        samples.push(RelaxationSample { time: e.time(), periods: e.time() / period, comparisons });
        Ok(())
    };
    let (_, stats) = transport_with(&ens, &mut guide, t_end, &opts, &times, |e| record(e, &mut samples))?;
    Ok(RelaxationReport { natural_period: period, cells: cfg.cells.clone(), samples, stats })
}

/// The default nonequilibrium start: uniform on the central third of the
/// box along every axis.
pub fn central_third(scenario: &WellScenario) -> DistributionSpec {
    let l = scenario.length;
    DistributionSpec::Uniform { lo: vec![l / 3.0; scenario.dim], hi: vec![2.0 * l / 3.0; scenario.dim] }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phases_are_seeded() {
        let a = WellScenario::default().superposition().unwrap();
        let b = WellScenario::default().superposition().unwrap();
        let c = WellScenario { phase_seed: 1, ..WellScenario::default() }.superposition().unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.modes().len(), 16);
        assert!((a.natural_period() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn sample_schedule_covers_the_run() {
        let cfg = RelaxationConfig { periods: 2.0, samples_per_period: 2, ..RelaxationConfig::default() };
        assert_eq!(cfg.sample_periods(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }
}

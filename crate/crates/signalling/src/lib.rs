//! Entangled pairs prepared by a brief `c x_A p_B` interaction, a local
//! perturbation at B, and the marginal distribution seen at A.

mod report;

pub use report::{bonferroni_threshold, quantum_marginal_a, SignalReport};

use serde::{Deserialize, Serialize};
use subquantum_core::ensembles::{sample, transport_with, DistributionSpec, Ensemble};
use subquantum_core::field::PointerCouplingField;
use subquantum_core::grid::{Axis, Grid};
use subquantum_core::potential::Potential;
use subquantum_core::propagate::propagate;
use subquantum_core::trajectory::{AnalyticGuide, PropagatedGuide, StepOptions};
use subquantum_core::wavefunction::Wavefunction;
use subquantum_core::{Error, Result};

/// Smallest pair count accepted by [`prepare_pairs`].
pub const MIN_PAIRS: usize = 10_000;

/// Setting compared against `none` by default.
pub const DEFAULT_SETTING: BSetting = BSetting::Step { strength: std::f64::consts::PI, width: 1.0 };

/// Default comparison time and histogram resolution.
pub const DEFAULT_T_SIGNAL: f64 = 1.0;
pub const DEFAULT_BINS: usize = 8;

/// Largest probability allowed on the grid margin.
const MARGIN_LIMIT: f64 = 1e-6;

/// What is done at B once the pairs are prepared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BSetting {
    #[default]
    None,
    /// Impulsive phase `exp(-i strength cos(wavenumber x_B))` at `t0`.
    Kick { strength: f64, wavenumber: f64 },
    /// Smoothed phase step `exp(-i strength (1 + tanh(x_B / width)) / 2)`.
    Step { strength: f64, width: f64 },
}

impl BSetting {
    fn phase(&self, x_b: f64) -> f64 {
        match *self {
            BSetting::None => 0.0,
            BSetting::Kick { strength, wavenumber } => strength * (wavenumber * x_b).cos(),
            BSetting::Step { strength, width } => 0.5 * strength * (1.0 + (x_b / width).tanh()),
        }
    }
}

/// Product Gaussians `psi0(x_A) psi0(x_B)` on a periodic square grid,
/// entangled by `c x_A p_B` during `[0, t_prep]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairScenario {
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub coupling: f64,
    pub t_prep: f64,
    /// Grid covers `[-half_width, half_width]` on both axes.
    pub half_width: f64,
    pub points: usize,
    pub dt: f64,
    /// Initial distribution over `(x_A, x_B)`, relative to the product.
    pub spec: DistributionSpec,
}

impl Default for PairScenario {
    fn default() -> Self {
        PairScenario {
            sigma_a: 1.0,
            sigma_b: 1.0,
            coupling: 5.0,
            t_prep: 0.2,
            half_width: 24.0,
            points: 256,
            dt: 0.01,
            spec: DistributionSpec::ScaledEquilibrium { beta: 2.0 },
        }
    }
}

impl PairScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_a > 0.0 && self.sigma_b > 0.0) {
            return Err(Error::param("sigma", "widths must be positive"));
        }
        if !self.coupling.is_finite() || !(self.t_prep > 0.0) {
            return Err(Error::param("t_prep", "need a finite coupling and t_prep > 0"));
        }
        if !(self.half_width > 0.0) || !(self.dt > 0.0) {
            return Err(Error::param("grid", "need positive half-width and dt"));
        }
        self.spec.validate(2)
    }

    pub fn grid(&self) -> Result<Grid> {
        let ax = Axis::periodic(-self.half_width, self.half_width, self.points)?;
        Ok(Grid::plane(ax, ax))
    }

    pub fn initial_state(&self) -> Result<Wavefunction> {
        Wavefunction::gaussian(self.grid()?, &[(0.0, self.sigma_a, 0.0), (0.0, self.sigma_b, 0.0)])
    }

    pub fn with_spec(&self, spec: DistributionSpec) -> Self {
        PairScenario { spec, ..self.clone() }
    }

    fn step_options(&self) -> StepOptions {
        StepOptions::new(self.dt)
    }
}

/// Pairs at the end of the preparation.
#[derive(Debug, Clone)]
pub struct PreparedPairs {
    pub scenario: PairScenario,
    pub psi: Wavefunction,
    pub ensemble: Ensemble,
    pub seed: u64,
}

impl PreparedPairs {
    /// Correlation coefficient of `(x_A, x_B)` under `|psi(t0)|^2`.
    pub fn quantum_correlation(&self) -> f64 {
        let grid = self.psi.grid();
        // m = (1, a, b, ab, aa, bb)
        let mut m = [0.0; 6];
        let mut x = [0.0; 2];
        for (i, p) in self.psi.density().into_iter().enumerate() {
            grid.point(i, &mut x);
            let t = [1.0, x[0], x[1], x[0] * x[1], x[0] * x[0], x[1] * x[1]];
            m.iter_mut().zip(t).for_each(|(acc, v)| *acc += p * v);
        }
        let e: Vec<f64> = m.iter().map(|v| v / m[0]).collect();
        (e[3] - e[1] * e[2]) / ((e[4] - e[1] * e[1]) * (e[5] - e[2] * e[2])).sqrt()
    }

    /// Sample correlation coefficient of the ensemble.
    pub fn ensemble_correlation(&self) -> f64 {
        correlation(&self.ensemble)
    }
}

pub fn correlation(ens: &Ensemble) -> f64 {
    let n = ens.len() as f64;
    let (a, b) = (ens.coordinate(0), ens.coordinate(1));
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
    let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
    let vb = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / n;
    cov / (va * vb).sqrt()
}

/// Samples the pairs at `t = 0` and carries wavefunction and ensemble
/// through the preparation interaction to `t0`.
pub fn prepare_pairs(scenario: &PairScenario, n_pairs: usize, seed: u64) -> Result<PreparedPairs> {
    scenario.validate()?;
    if n_pairs < MIN_PAIRS {
        return Err(Error::SampleTooSmall { got: n_pairs, need: MIN_PAIRS });
    }
    let psi0 = scenario.initial_state()?;
    let ens0 = sample(&scenario.spec, &psi0, n_pairs, seed)?;
    let steps = (scenario.t_prep / scenario.dt).ceil().max(1.0) as usize;
    let psi = propagate(&psi0, &Potential::PointerCoupling { coupling: scenario.coupling }, scenario.t_prep / steps as f64, steps)?;
    let margin = psi.margin_mass();
    if margin > MARGIN_LIMIT {
        return Err(Error::DomainOverflow { mass: margin, time: scenario.t_prep });
    }
    let grid = psi0.grid();
    let (lo, hi) = grid.axis(0).interior();
    let field = PointerCouplingField { coupling: scenario.coupling, bounds: [(lo, hi), (lo, hi)], spacing: grid.min_spacing() };
    let mut guide = AnalyticGuide::new(field, 0.0);
    let (ensemble, _) = transport_with(&ens0, &mut guide, scenario.t_prep, &scenario.step_options(), &[], |_| Ok(()))
        .map_err(|e| match e {
            Error::TrajectoryExited { time, .. } => Error::DomainOverflow { mass: 1.0 / n_pairs as f64, time },
            e => e,
        })?;
    Ok(PreparedPairs { scenario: scenario.clone(), psi, ensemble, seed })
}

/// One B-setting carried to `t_signal`.
#[derive(Debug, Clone)]
pub struct SettingRun {
    pub setting: BSetting,
    pub psi: Wavefunction,
    pub ensemble: Ensemble,
}

/// Evolves the prepared pairs freely from `t0` to `t_signal` after applying
/// `setting` at B.
pub fn run_setting(prepared: &PreparedPairs, setting: BSetting, t_signal: f64) -> Result<SettingRun> {
    let t0 = prepared.psi.time();
    if !(t_signal > t0) {
        return Err(Error::param("t_signal", "must follow the preparation"));
    }
    let sc = &prepared.scenario;
    let mut guide = PropagatedGuide::new(prepared.psi.clone(), &Potential::Free, sc.dt)?;
    guide.kick(|x| setting.phase(x[1]));
    let (ensemble, _) = transport_with(&prepared.ensemble, &mut guide, t_signal, &sc.step_options(), &[], |_| Ok(()))?;
    let psi = guide.wavefunction().clone();
    let margin = psi.margin_mass();
    if margin > MARGIN_LIMIT {
        return Err(Error::DomainOverflow { mass: margin, time: t_signal });
    }
    Ok(SettingRun { setting, psi, ensemble })
}

/// Runs `none` and `setting` on the same prepared pairs and compares the
/// A-marginals at `t_signal`.
pub fn run_signal_experiment(prepared: &PreparedPairs, setting: BSetting, t_signal: f64, bins: usize) -> Result<SignalReport> {
    let reference = run_setting(prepared, BSetting::None, t_signal)?;
    let other = run_setting(prepared, setting, t_signal)?;
    SignalReport::compare(&reference, &other, bins)
}

/// Maximum standardized difference as a function of the narrowing `beta`
/// of `rho0 = |psi0|^(2 beta)`, each on freshly prepared pairs.
pub fn beta_sweep(
    scenario: &PairScenario,
    betas: &[f64],
    n_pairs: usize,
    setting: BSetting,
    t_signal: f64,
    bins: usize,
    seed: u64,
) -> Result<Vec<(f64, SignalReport)>> {
    betas
        .iter()
        .map(|&beta| {
            let spec = if beta == 1.0 { DistributionSpec::Equilibrium } else { DistributionSpec::ScaledEquilibrium { beta } };
            let prepared = prepare_pairs(&scenario.with_spec(spec), n_pairs, seed)?;
            Ok((beta, run_signal_experiment(&prepared, setting, t_signal, bins)?))
        })
        .collect()
}

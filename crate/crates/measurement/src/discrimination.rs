//! Telling two non-orthogonal states apart from one tracked trajectory.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use subquantum_core::field::GuidanceField;
use subquantum_core::packet::GaussianPacket;
use subquantum_core::rng;
use subquantum_core::trajectory::{AnalyticGuide, StepOptions};
use subquantum_core::{Error, Result};

use crate::apparatus::PointerApparatus;
use crate::tracking::{track_trajectory, TrackedSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Discrimination {
    /// 1 or 2, or `None` when the residuals tie.
    pub label: Option<u8>,
    pub residuals: [f64; 2],
    /// `|R1 - R2|`.
    pub score: f64,
}

fn residual<F: GuidanceField>(field: &F, data: &[TrackedSample]) -> f64 {
    let mut v = [0.0];
    data.iter()
        .map(|s| {
            field.velocity(&field.slice(s.t), &[s.x_hat], &mut v);
            (s.v_hat - v[0]).powi(2)
        })
        .sum()
}

/// Picks the candidate whose velocity field best explains the measured
/// `(x, v, t)`: `argmin_k sum_i (v_i - v_k(x_i, t_i))^2`.
pub fn discriminate<A: GuidanceField, B: GuidanceField>(psi1: &A, psi2: &B, data: &[TrackedSample]) -> Result<Discrimination> {
    if psi1.dim() != 1 || psi2.dim() != 1 {
        return Err(Error::GridMismatch("candidates must be one-dimensional".into()));
    }
    if data.is_empty() {
        return Err(Error::param("data", "need at least one tracked sample"));
    }
    let r = [residual(psi1, data), residual(psi2, data)];
    let gap = (r[0] - r[1]).abs();
    let tie = 1e-9 * r[0].max(r[1]) + 1e-15;
    let label = if gap <= tie {
        None
    } else if r[0] < r[1] {
        Some(1)
    } else {
        Some(2)
    };
    Ok(Discrimination { label, residuals: r, score: gap })
}

/// Two equal-width free packets and the tracking used to tell them apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscriminationScenario {
    pub states: [GaussianPacket; 2],
    /// Samples in the window.
    pub window: usize,
    pub t_first: f64,
    pub t_last: f64,
    pub eps_vel: f64,
    pub apparatus: PointerApparatus,
    pub dt: f64,
}

/// `|<u0|u1>| = exp(-2 k^2 sigma^2)` for centred packets with momenta `+-k`.
pub fn momentum_for_overlap(overlap: f64, sigma: f64) -> Result<f64> {
    if !(overlap > 0.0 && overlap < 1.0) || !(sigma > 0.0) {
        return Err(Error::param("overlap", "need 0 < overlap < 1 and sigma > 0"));
    }
    Ok((-overlap.ln() / 2.0).sqrt() / sigma)
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub truth: u8,
    pub x0: f64,
    pub decision: Discrimination,
}

impl TrialOutcome {
    pub fn correct(&self) -> bool {
        self.decision.label == Some(self.truth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscriminationSummary {
    pub trials: usize,
    pub correct: usize,
    pub undecided: usize,
    pub accuracy: f64,
}

impl DiscriminationScenario {
    /// Centred packets of width `sigma` with momenta `+-k` chosen for the
    /// requested overlap, tracked at the given resolution.
    pub fn for_overlap(overlap: f64, sigma: f64, resolution: f64) -> Result<Self> {
        let k = momentum_for_overlap(overlap, sigma)?;
        let s = DiscriminationScenario {
            states: [GaussianPacket::new(0.0, sigma, k)?, GaussianPacket::new(0.0, sigma, -k)?],
            window: 8,
            t_first: 0.1,
            t_last: 1.0,
            eps_vel: 0.05,
            apparatus: PointerApparatus::with_resolution(resolution)?,
            dt: 0.01,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.apparatus.validate()?;
        if self.window == 0 {
            return Err(Error::param("window", "need at least one sample"));
        }
        if !(self.t_last >= self.t_first) || self.t_first - 0.5 * self.eps_vel < 0.0 {
            return Err(Error::param("window", "need eps_vel/2 <= t_first <= t_last"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::param("dt", "must be positive"));
        }
        Ok(())
    }

    /// `window` equally spaced times over `[t_first, t_last]`.
    pub fn schedule(&self) -> Vec<f64> {
        if self.window == 1 {
            return vec![self.t_first];
        }
        let h = (self.t_last - self.t_first) / (self.window - 1) as f64;
        (0..self.window).map(|i| self.t_first + i as f64 * h).collect()
    }

    pub fn overlap(&self) -> Result<f64> {
        Ok(self.states[0].overlap(&self.states[1])?.norm())
    }

    /// Sends state `truth` (1 or 2) with an equilibrium hidden position,
    /// tracks it and discriminates.
    pub fn run_trial(&self, truth: u8, seed: u64) -> Result<TrialOutcome> {
        if truth != 1 && truth != 2 {
            return Err(Error::param("truth", "label must be 1 or 2"));
        }
        let state = self.states[truth as usize - 1];
        let mut r = rng::stream(seed, 0);
        let x0 = Normal::new(state.center, state.sigma).expect("valid packet").sample(&mut r);
        self.run_trial_from(truth, x0, rng::derive(seed, 1))
    }

    /// As [`run_trial`](Self::run_trial) with the hidden start `x0` given;
    /// `seed` drives the pointers only.
    pub fn run_trial_from(&self, truth: u8, x0: f64, seed: u64) -> Result<TrialOutcome> {
        if truth != 1 && truth != 2 {
            return Err(Error::param("truth", "label must be 1 or 2"));
        }
        let state = self.states[truth as usize - 1];
        let mut guide = AnalyticGuide::new(state, 0.0);
        let path = track_trajectory(&mut guide, x0, &self.schedule(), &self.apparatus, self.eps_vel, &StepOptions::new(self.dt), seed)?;
        let decision = discriminate(&self.states[0], &self.states[1], &path.samples)?;
        Ok(TrialOutcome { truth, x0, decision })
    }

    /// `trials` independent trials with uniformly random truth labels.
    pub fn run_trials(&self, trials: usize, seed: u64) -> Result<DiscriminationSummary> {
        self.validate()?;
        let outcomes: Vec<TrialOutcome> = (0..trials)
            .into_par_iter()
            .map(|i| {
                let s = rng::derive(seed, i as u64);
                let truth = 1 + (rng::derive(s, 2) & 1) as u8;
                self.run_trial(truth, s)
            })
            .collect::<Result<_>>()?;
        let correct = outcomes.iter().filter(|o| o.correct()).count();
        let undecided = outcomes.iter().filter(|o| o.decision.label.is_none()).count();
        Ok(DiscriminationSummary { trials, correct, undecided, accuracy: correct as f64 / trials.max(1) as f64 })
    }

    /// Accuracy per window length over common trial seeds.
    pub fn window_sweep(&self, windows: &[usize], trials: usize, seed: u64) -> Result<Vec<(usize, DiscriminationSummary)>> {
        windows
            .iter()
            .map(|&w| {
                let s = DiscriminationScenario { window: w, ..*self };
                Ok((w, s.run_trials(trials, seed)?))
            })
            .collect()
    }
}

//! Reading `s` off one tracked trajectory of the well state
//! `psi = alpha0 phi_1 e^{-i E_1 t} + alpha1 phi_2 e^{-i E_2 t}`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use subq_measurement::{track_trajectory, PointerApparatus, TrackedSample};
use subquantum_core::basis::{EigenBasis, Mode, ModeSuperposition};
use subquantum_core::rng;
use subquantum_core::stats;
use subquantum_core::trajectory::{AnalyticGuide, StepOptions};
use subquantum_core::{Error, Result};

use crate::gadget::MAX_QUBITS;
use crate::modes::equilibrium_start;

/// Speeds below this many velocity resolutions read as "no motion".
pub const VERDICT_FACTOR: f64 = 3.0;

/// The qubit mapped onto the two lowest well modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevel {
    pub basis: EigenBasis,
    pub alpha: [f64; 2],
}

impl TwoLevel {
    pub fn new(alpha: [f64; 2], basis: EigenBasis) -> Result<Self> {
        let norm = alpha[0].hypot(alpha[1]);
        if !(norm > 0.0) || alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::param("alpha", "amplitudes must be finite and not both zero"));
        }
        Ok(TwoLevel { basis, alpha: [alpha[0] / norm, alpha[1] / norm] })
    }

    /// `alpha ∝ ((2^n - s), s)`.
    pub fn for_count(n: usize, s: u64, basis: EigenBasis) -> Result<Self> {
        let size = 1u64 << n;
        if s > size {
            return Err(Error::param("s", format!("{s} exceeds 2^{n}")));
        }
        Self::new([(size - s) as f64, s as f64], basis)
    }

    pub fn beat(&self) -> f64 {
        self.basis.energy(2) - self.basis.energy(1)
    }

    /// `2 pi / (E_2 - E_1)`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.beat()
    }

    pub fn superposition(&self) -> Result<ModeSuperposition> {
        ModeSuperposition::new(
            vec![self.basis],
            vec![
                Mode { quantum: [1, 0], amp: Complex64::new(self.alpha[0], 0.0) },
                Mode { quantum: [2, 0], amp: Complex64::new(self.alpha[1], 0.0) },
            ],
        )
    }

    /// `-alpha0 alpha1 sin(beat t) W(x) / |psi|^2` with the Wronskian
    /// `W = phi_1 phi_2' - phi_2 phi_1'`.
    pub fn velocity(&self, x: f64, t: f64) -> f64 {
        velocity_for(&self.basis, self.alpha, x, t)
    }
}

fn velocity_for(basis: &EigenBasis, alpha: [f64; 2], x: f64, t: f64) -> f64 {
    let (p1, p2) = (basis.phi(1, x), basis.phi(2, x));
    let w = p1 * basis.dphi(2, x) - p2 * basis.dphi(1, x);
    let bt = (basis.energy(2) - basis.energy(1)) * t;
    let rho = alpha[0] * alpha[0] * p1 * p1 + alpha[1] * alpha[1] * p2 * p2 + 2.0 * alpha[0] * alpha[1] * p1 * p2 * bt.cos();
    if rho > 0.0 {
        -alpha[0] * alpha[1] * bt.sin() * w / rho
    } else {
        0.0
    }
}

/// Equilibrium RMS speed when `sin(beat t) = 1`,
/// `alpha0 alpha1 (int W^2 / (alpha0^2 phi_1^2 + alpha1^2 phi_2^2))^{1/2}`.
pub fn rms_speed(level: &TwoLevel) -> f64 {
    let [a0, a1] = level.alpha;
    if a0 == 0.0 || a1 == 0.0 {
        return 0.0;
    }
    let b = &level.basis;
    let f = |x: f64| {
        let (p1, p2) = (b.phi(1, x), b.phi(2, x));
        let w = p1 * b.dphi(2, x) - p2 * b.dphi(1, x);
        let rho = a0 * a0 * p1 * p1 + a1 * a1 * p2 * p2;
        if rho > 0.0 {
            w * w / rho
        } else {
            0.0
        }
    };
    a0 * a1 * stats::integrate(&f, 0.0, b.length(), 1e-10).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadConfig {
    /// First-register size; fixes `s = 2^n alpha1 / (alpha0 + alpha1)`.
    pub n: usize,
    /// Tracked samples over one beat period.
    pub window: usize,
    pub eps_vel: f64,
    pub dt: f64,
    /// Smallest `s` the run must be able to see.
    pub contrast: u64,
    pub length: f64,
}

impl Default for ReadConfig {
    fn default() -> Self {
        ReadConfig { n: 4, window: 8, eps_vel: 0.05, dt: 0.002, contrast: 1, length: PI }
    }
}

impl ReadConfig {
    pub fn basis(&self) -> Result<EigenBasis> {
        EigenBasis::well(self.length)
    }

    /// Midpoints of `window` equal slices of the beat period, so no sample
    /// falls where `sin(beat t)` vanishes.
    pub fn schedule(&self, period: f64) -> Vec<f64> {
        (0..self.window).map(|i| (i as f64 + 0.5) * period / self.window as f64).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_QUBITS {
            return Err(Error::RegisterTooLarge { qubits: self.n + 1, limit: MAX_QUBITS + 1 });
        }
        if self.window == 0 || !(self.eps_vel > 0.0) || !(self.dt > 0.0) {
            return Err(Error::param("read", "need window >= 1, eps_vel > 0 and dt > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SReading {
    /// `true` for "s > 0".
    pub positive: bool,
    pub s_hat: f64,
    pub max_speed: f64,
    /// `VERDICT_FACTOR * 2 resolution / eps_vel`.
    pub threshold: f64,
    pub x0: f64,
    pub samples: Vec<TrackedSample>,
}

impl SReading {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# read positive={} s_hat={} max_speed={} threshold={}", self.positive, self.s_hat, self.max_speed, self.threshold);
        s.push_str("# t x_hat v_hat x_true v_true\n");
        for p in &self.samples {
            let _ = writeln!(s, "{:e} {:e} {:e} {:e} {:e}", p.t, p.x_hat, p.v_hat, p.x_true, p.v_true);
        }
        s
    }
}

/// Smallest `s` in `1..=2^n` whose equilibrium RMS speed reaches the
/// verdict threshold, or `None`.
pub fn min_distinguishable(n: usize, basis: EigenBasis, threshold: f64) -> Result<Option<u64>> {
    for s in 1..=1u64 << n {
        if rms_speed(&TwoLevel::for_count(n, s, basis)?) >= threshold {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

/// `s = 2^n sin(theta) / (sin(theta) + cos(theta))` from the amplitude
/// angle that best explains the tracked velocities.
fn fit_s(basis: &EigenBasis, samples: &[TrackedSample], n: usize) -> f64 {
    let r = |theta: f64| {
        let alpha = [theta.cos(), theta.sin()];
        samples.iter().map(|p| (p.v_hat - velocity_for(basis, alpha, p.x_hat, p.t)).powi(2)).sum::<f64>()
    };
    const GRID: usize = 400;
    let h = FRAC_PI_2 / GRID as f64;
    let k = (0..=GRID).min_by(|&a, &b| r(a as f64 * h).total_cmp(&r(b as f64 * h))).unwrap();
    let lo = (k as f64 - 1.0).max(0.0) * h;
    let hi = (k as f64 + 1.0).min(GRID as f64) * h;
    let (theta, _) = stats::golden_section(r, lo, hi, 1e-12);
    (1u64 << n) as f64 * theta.sin() / (theta.sin() + theta.cos())
}

/// Tracks one equilibrium particle guided by `level` and decides `s = 0`
/// (every measured speed below the threshold) or `s > 0`.
///
/// `s = 2^n` leaves the particle in the stationary `phi_2` and reads as
/// `s = 0`, with `s_hat = 0`.
pub fn read_s_via_trajectory(level: &TwoLevel, apparatus: &PointerApparatus, config: &ReadConfig, seed: u64) -> Result<SReading> {
    config.validate()?;
    apparatus.validate()?;
    let threshold = VERDICT_FACTOR * 2.0 * apparatus.resolution() / config.eps_vel;
    if config.contrast > 0 {
        match min_distinguishable(config.n, level.basis, threshold)? {
            Some(min_s) if min_s <= config.contrast => {}
            other => {
                return Err(Error::ResolutionTooCoarse { resolution: apparatus.resolution(), min_s: other.unwrap_or((1u64 << config.n) + 1) });
            }
        }
    }
    let field = level.superposition()?;
    let x0 = equilibrium_start(&field, &mut rng::stream(seed, 0));
    let mut guide = AnalyticGuide::new(field, 0.0);
    let path = track_trajectory(
        &mut guide,
        x0,
        &config.schedule(level.period()),
        apparatus,
        config.eps_vel,
        &StepOptions::new(config.dt),
        rng::derive(seed, 1),
    )?;
    let max_speed = path.samples.iter().map(|p| p.v_hat.abs()).fold(0.0, f64::max);
    let positive = max_speed >= threshold;
    // Without motion phi_1 and phi_2 fit equally well; follow the verdict.
    Ok(SReading {
        positive,
        s_hat: if positive { fit_s(&level.basis, &path.samples, config.n) } else { 0.0 },
        max_speed,
        threshold,
        x0,
        samples: path.samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReadSummary {
    pub s: u64,
    pub trials: usize,
    pub correct: usize,
    pub rate: f64,
    pub median_s_hat: f64,
}

/// Repeated single-run readings of the gadget state for a count `s`.
pub fn read_s_trials(s: u64, apparatus: &PointerApparatus, config: &ReadConfig, trials: usize, seed: u64) -> Result<ReadSummary> {
    let level = TwoLevel::for_count(config.n, s, config.basis()?)?;
    let readings: Vec<SReading> =
        (0..trials).into_par_iter().map(|i| read_s_via_trajectory(&level, apparatus, config, rng::derive(seed, i as u64))).collect::<Result<_>>()?;
    let correct = readings.iter().filter(|r| r.positive == (s > 0)).count();
    let mut hats: Vec<f64> = readings.iter().map(|r| r.s_hat).collect();
    hats.sort_by(f64::total_cmp);
    let median_s_hat = if hats.is_empty() { f64::NAN } else { hats[hats.len() / 2] };
    Ok(ReadSummary { s, trials, correct, rate: correct as f64 / trials.max(1) as f64, median_s_hat })
}

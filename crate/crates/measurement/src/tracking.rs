//! Reconstruction of a hidden trajectory from a sequence of fresh pointer
//! measurements.

use std::fmt::Write as _;

use serde::Serialize;
use subquantum_core::rng;
use subquantum_core::trajectory::{follow, Guide, StepOptions, Trajectory};
use subquantum_core::{Error, Result};

use crate::apparatus::PointerApparatus;

/// One reconstructed point of the path, with the hidden truth alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackedSample {
    pub t: f64,
    pub x_hat: f64,
    /// Symmetric difference of two readings `eps_vel` apart.
    pub v_hat: f64,
    pub x_true: f64,
    pub v_true: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedPath {
    pub samples: Vec<TrackedSample>,
    /// Position resolution `w / 2at` of each pointer.
    pub resolution: f64,
    pub eps_vel: f64,
    /// The hidden path at `t_i - eps/2, t_i, t_i + eps/2`.
    pub hidden: Trajectory,
}

impl TrackedPath {
    /// Worst-case velocity error from pointer noise alone, `2 res / eps`.
    pub fn velocity_resolution(&self) -> f64 {
        2.0 * self.resolution / self.eps_vel
    }

    pub fn max_position_error(&self) -> f64 {
        self.samples.iter().map(|s| (s.x_hat - s.x_true).abs()).fold(0.0, f64::max)
    }

    pub fn max_velocity_error(&self) -> f64 {
        self.samples.iter().map(|s| (s.v_hat - s.v_true).abs()).fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# tracked resolution={} eps_vel={}", self.resolution, self.eps_vel);
        s.push_str("# t x_hat v_hat x_true v_true\n");
        for p in &self.samples {
            let _ = writeln!(s, "{:e} {:e} {:e} {:e} {:e}", p.t, p.x_hat, p.v_hat, p.x_true, p.v_true);
        }
        s
    }
}

/// Tracks the particle starting at `x0` through a 1D `guide`. At each
/// scheduled time three fresh pointers read the position at `t_i` and at
/// `t_i -+ eps_vel / 2`; the outer pair gives the velocity. Pointer
/// interactions are taken as impulsive on the time scale of the system.
pub fn track_trajectory<G: Guide>(
    guide: &mut G,
    x0: f64,
    schedule: &[f64],
    app: &PointerApparatus,
    eps_vel: f64,
    opts: &StepOptions,
    seed: u64,
) -> Result<TrackedPath> {
    app.validate()?;
    if guide.dim() != 1 {
        return Err(Error::GridMismatch("tracking works on one-dimensional systems".into()));
    }
    if !(eps_vel > 0.0) || !eps_vel.is_finite() {
        return Err(Error::param("eps_vel", "must be positive"));
    }
    if schedule.is_empty() {
        return Err(Error::param("schedule", "need at least one time"));
    }
    if schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("schedule", "must be strictly increasing"));
    }
    if let Some(spacing) = schedule.windows(2).map(|w| w[1] - w[0]).min_by(f64::total_cmp) {
        if spacing <= eps_vel {
            return Err(Error::ScheduleTooDense { spacing, eps: eps_vel });
        }
    }
    let half = 0.5 * eps_vel;
    if schedule[0] - half < guide.time() {
        return Err(Error::param("schedule", "first velocity pair starts before the guide time"));
    }
    let times: Vec<f64> = schedule.iter().flat_map(|&t| [t - half, t, t + half]).collect();
    let t_end = *times.last().expect("non-empty");
    let hidden = follow(guide, &[x0], t_end, opts, &times)?;
    if hidden.len() != times.len() {
        return Err(Error::param("schedule", "sample times were not all reached"));
    }
    let at = app.strength();
    let mut r = rng::stream(seed, 0);
    let mut read = |x: f64| {
        let y = app.draw_start(&mut r) + app.coupling * x * app.duration;
        y / at
    };
    let samples = schedule
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let (xm, xc, xp) = (hidden.position(3 * i)[0], hidden.position(3 * i + 1)[0], hidden.position(3 * i + 2)[0]);
            let (rm, rc, rp) = (read(xm), read(xc), read(xp));
            TrackedSample { t, x_hat: rc, v_hat: (rp - rm) / eps_vel, x_true: xc, v_true: hidden.velocity(3 * i + 1)[0] }
        })
        .collect();
    Ok(TrackedPath { samples, resolution: app.resolution(), eps_vel, hidden })
}

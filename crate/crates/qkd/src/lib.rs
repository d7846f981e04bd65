//! B92 key distribution over two non-orthogonal Gaussian carriers, with an
//! optional passive eavesdropper who reads the hidden trajectory.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use subq_measurement::{momentum_for_overlap, DiscriminationScenario, PointerApparatus};
use subquantum_core::packet::GaussianPacket;
use subquantum_core::rng;
use subquantum_core::{Error, Result};

/// Fewest rounds accepted by [`run_b92`].
pub const MIN_ROUNDS: usize = 100;

/// Eve's tracking apparatus and window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EveConfig {
    pub resolution: f64,
    pub window: usize,
    pub t_first: f64,
    pub t_last: f64,
    pub eps_vel: f64,
    pub dt: f64,
}

impl Default for EveConfig {
    fn default() -> Self {
        EveConfig { resolution: 1e-4, window: 8, t_first: 0.1, t_last: 1.0, eps_vel: 0.05, dt: 0.01 }
    }
}

impl EveConfig {
    /// Last instant at which Eve's pointers touch the carrier.
    pub fn end(&self) -> f64 {
        self.t_last + 0.5 * self.eps_vel
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct B92Config {
    /// `|<u0|u1>|`.
    pub overlap: f64,
    /// Width of both carriers.
    pub sigma: f64,
    pub rounds: usize,
    /// Time at which Bob measures.
    pub transit: f64,
    pub eve: Option<EveConfig>,
    pub seed: u64,
}

impl Default for B92Config {
    fn default() -> Self {
        B92Config { overlap: 0.5, sigma: 1.0, rounds: 10_000, transit: 1.2, eve: None, seed: 0 }
    }
}

impl B92Config {
    pub fn with_eve(self, eve: Option<EveConfig>) -> Self {
        B92Config { eve, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.overlap > 0.0 && self.overlap < 1.0) {
            return Err(Error::param("overlap", "need 0 < |<u0|u1>| < 1"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::param("sigma", "must be positive"));
        }
        if self.rounds < MIN_ROUNDS {
            return Err(Error::SampleTooSmall { got: self.rounds, need: MIN_ROUNDS });
        }
        if !(self.transit > 0.0) || !self.transit.is_finite() {
            return Err(Error::param("transit", "must be positive"));
        }
        if let Some(eve) = &self.eve {
            if eve.end() > self.transit {
                return Err(Error::param("eve.window", format!("ends at {} after the transit time {}", eve.end(), self.transit)));
            }
            self.eve_scenario(eve)?.validate()?;
        }
        Ok(())
    }

    /// `u0` with momentum `+k` and `u1` with `-k`, both centred.
    pub fn carriers(&self) -> Result<[GaussianPacket; 2]> {
        let k = momentum_for_overlap(self.overlap, self.sigma)?;
        Ok([GaussianPacket::new(0.0, self.sigma, k)?, GaussianPacket::new(0.0, self.sigma, -k)?])
    }

    fn eve_scenario(&self, eve: &EveConfig) -> Result<DiscriminationScenario> {
        Ok(DiscriminationScenario {
            states: self.carriers()?,
            window: eve.window,
            t_first: eve.t_first,
            t_last: eve.t_last,
            eps_vel: eve.eps_vel,
            apparatus: PointerApparatus::with_resolution(eve.resolution)?,
            dt: eve.dt,
        })
    }

    /// Probability that Bob's test is conclusive, `(1 - |<u0|u1>|^2) / 2`.
    pub fn conclusive_probability(&self) -> f64 {
        0.5 * (1.0 - self.overlap * self.overlap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Round {
    pub round: usize,
    pub alice_bit: u8,
    /// Hidden start of the carrier; visible to the simulation only.
    pub hidden_x0: f64,
    /// Eve's bit, `None` without Eve or when her residuals tie.
    pub eve_bit: Option<u8>,
    /// Bob tests against `u_basis`.
    pub bob_basis: u8,
    /// Outcome "orthogonal to `u_basis`".
    pub bob_pass: bool,
    /// `1 - bob_basis` on a pass.
    pub bob_bit: Option<u8>,
    pub sifted: bool,
}

impl Round {
    /// A sifted round is exactly a passed test, and its bit is the
    /// complement of the tested basis.
    pub fn obeys_sift_rule(&self) -> bool {
        self.sifted == self.bob_pass && self.bob_bit == self.bob_pass.then_some(1 - self.bob_basis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub rounds: usize,
    pub sifted: usize,
    pub sift_rate: f64,
    /// Binomial standard error of `sift_rate`.
    pub sift_rate_se: f64,
    pub expected_sift_rate: f64,
    /// Error rate on sifted rounds.
    pub qber: f64,
    /// `sqrt(max(q, 1/n)(1 - q)/n)` with `n` sifted rounds.
    pub qber_se: f64,
    /// Fraction of sifted bits Eve holds correctly.
    pub eve_agreement: Option<f64>,
    pub eve_undecided: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolTranscript {
    pub config: B92Config,
    pub rounds: Vec<Round>,
    pub summary: Summary,
}

impl ProtocolTranscript {
    /// `-1` marks an absent bit.
    pub fn to_text(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let agreement = s.eve_agreement.map_or("none".to_string(), |a| a.to_string());
        let _ = writeln!(
            out,
            "# b92 rounds={} sifted={} sift_rate={} expected_sift_rate={} qber={} qber_se={} eve_agreement={} eve_undecided={}",
            s.rounds, s.sifted, s.sift_rate, s.expected_sift_rate, s.qber, s.qber_se, agreement, s.eve_undecided
        );
        out.push_str("# round alice_bit hidden_x0 eve_bit bob_basis bob_pass bob_bit sifted\n");
        let bit = |b: Option<u8>| b.map_or(-1, i32::from);
        for r in &self.rounds {
            let _ = writeln!(
                out,
                "{} {} {:e} {} {} {} {} {}",
                r.round,
                r.alice_bit,
                r.hidden_x0,
                bit(r.eve_bit),
                r.bob_basis,
                u8::from(r.bob_pass),
                bit(r.bob_bit),
                u8::from(r.sifted)
            );
        }
        out
    }
}

fn summarise(config: &B92Config, rounds: &[Round]) -> Summary {
    let n = rounds.len() as f64;
    let sifted: Vec<&Round> = rounds.iter().filter(|r| r.sifted).collect();
    let m = sifted.len() as f64;
    let sift_rate = m / n;
    let errors = sifted.iter().filter(|r| r.bob_bit != Some(r.alice_bit)).count() as f64;
    let qber = if m > 0.0 { errors / m } else { 0.0 };
    let qber_se = if m > 0.0 { (qber.max(1.0 / m) * (1.0 - qber) / m).sqrt() } else { f64::INFINITY };
    let eve_agreement = match config.eve {
        Some(_) if m > 0.0 => Some(sifted.iter().filter(|r| r.eve_bit == Some(r.alice_bit)).count() as f64 / m),
        _ => None,
    };
    Summary {
        rounds: rounds.len(),
        sifted: sifted.len(),
        sift_rate,
        sift_rate_se: (sift_rate * (1.0 - sift_rate) / n).sqrt(),
        expected_sift_rate: config.conclusive_probability(),
        qber,
        qber_se,
        eve_agreement,
        eve_undecided: rounds.iter().filter(|r| config.eve.is_some() && r.eve_bit.is_none()).count(),
    }
}

/// Runs the protocol. Each round has its own seed, split into separate
/// streams for Alice, the hidden position, Eve's pointers and Bob, so
/// switching Eve on changes nothing Alice or Bob see.
pub fn run_b92(config: &B92Config) -> Result<ProtocolTranscript> {
    config.validate()?;
    let carriers = config.carriers()?;
    let eve = config.eve.as_ref().map(|e| config.eve_scenario(e)).transpose()?;
    // Bob's test against u_j passes with probability 1 - |<u_j|u_b>|^2,
    // which free flight leaves unchanged.
    let cross = carriers[0].overlap(&carriers[1])?.norm_sqr();
    let rounds: Vec<Round> = (0..config.rounds)
        .into_par_iter()
        .map(|i| {
            let s = rng::derive(config.seed, i as u64);
            let alice_bit = (rng::derive(s, 0) & 1) as u8;
            let carrier = carriers[alice_bit as usize];
            let hidden_x0 = Normal::new(carrier.center, carrier.sigma).expect("valid packet").sample(&mut rng::stream(s, 1));
            let eve_bit = match &eve {
                Some(sc) => sc.run_trial_from(alice_bit + 1, hidden_x0, rng::derive(s, 2))?.decision.label.map(|l| l - 1),
                None => None,
            };
            let bob_basis = (rng::derive(s, 3) & 1) as u8;
            let p_pass = if bob_basis == alice_bit { 0.0 } else { 1.0 - cross };
            let bob_pass = rng::stream(s, 4).random::<f64>() < p_pass;
            let bob_bit = bob_pass.then_some(1 - bob_basis);
            Ok(Round { round: i, alice_bit, hidden_x0, eve_bit, bob_basis, bob_pass, bob_bit, sifted: bob_pass })
        })
        .collect::<Result<_>>()?;
    let summary = summarise(config, &rounds);
    Ok(ProtocolTranscript { config: *config, rounds, summary })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub resolution: f64,
    pub agreement: f64,
    pub qber: f64,
    /// `qber - baseline qber`.
    pub induced_qber: f64,
    /// `induced_qber` over the baseline's `qber_se`.
    pub induced_sigmas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EveSweep {
    pub baseline: Summary,
    /// Ordered from coarse to fine resolution.
    pub points: Vec<SweepPoint>,
    /// Agreement never falls as the resolution improves.
    pub monotone: bool,
}

impl EveSweep {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# eve_sweep baseline_qber={} baseline_qber_se={} monotone={}", self.baseline.qber, self.baseline.qber_se, self.monotone);
        s.push_str("# resolution agreement qber induced_qber induced_sigmas\n");
        for p in &self.points {
            let _ = writeln!(s, "{:e} {:e} {:e} {:e} {:e}", p.resolution, p.agreement, p.qber, p.induced_qber, p.induced_sigmas);
        }
        s
    }
}

/// Eve's key agreement and the QBER she induces at each resolution, all on
/// the seed of `config`; the no-Eve run on the same seed is the baseline.
pub fn eve_sweep(config: &B92Config, resolutions: &[f64]) -> Result<EveSweep> {
    if resolutions.len() < 3 {
        return Err(Error::param("resolutions", "need at least three"));
    }
    let mut sorted = resolutions.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let baseline = run_b92(&config.with_eve(None))?.summary;
    let eve = config.eve.unwrap_or_default();
    let points = sorted
        .iter()
        .map(|&resolution| {
            let run = run_b92(&config.with_eve(Some(EveConfig { resolution, ..eve })))?.summary;
            let induced = run.qber - baseline.qber;
            Ok(SweepPoint {
                resolution,
                agreement: run.eve_agreement.unwrap_or(0.0),
                qber: run.qber,
                induced_qber: induced,
                induced_sigmas: induced / baseline.qber_se,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = points.windows(2).all(|w| w[1].agreement >= w[0].agreement);
    Ok(EveSweep { baseline, points, monotone })
}

//! Equilibrium tests on a radius sample and the maximum-likelihood parent.

use serde::Serialize;
use subquantum_core::stats;
use subquantum_core::{Error, Result};

use crate::model::{cdf_eq, quantile_eq, RadialParent, MU_EQ, VAR_EQ};
use crate::sampling::RadialSample;

/// Default `|ln(P(r|eq) / P(r|noneq))|` beyond which a verdict is given.
/// A convention, not a derived value.
pub const DEFAULT_LOG_RATIO_THRESHOLD: f64 = 10.0;

/// Equiprobable bins under `p_eq` for the equilibrium chi-square test.
pub const EQ_BINS: usize = 20;

const MIN_CLT: usize = 30;
const MIN_FIT: usize = 100;
const LAMBDA_RANGE: (f64, f64) = (0.1, 10.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanTest {
    pub n: usize,
    pub mean: f64,
    /// `sigma_hat / sqrt(n)` from the sample standard deviation.
    pub std_err: f64,
    /// `(mean - 3/2) / (sigma_eq / sqrt(n))`.
    pub z: f64,
    pub p: f64,
}

pub fn clt_mean_test(radii: &[f64]) -> Result<MeanTest> {
    if radii.len() < MIN_CLT {
        return Err(Error::SampleTooSmall { got: radii.len(), need: MIN_CLT });
    }
    let n = radii.len();
    let (mean, var) = stats::mean_var(radii);
    let z = (mean - MU_EQ) / (VAR_EQ / n as f64).sqrt();
    Ok(MeanTest { n, mean, std_err: (var / n as f64).sqrt(), z, p: stats::two_sided_p(z) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LikelihoodRatio {
    /// `ln P(r_bar | eq) - ln P(r_bar | candidate)` under the normal law of
    /// the sample mean.
    pub log_ratio: f64,
    pub candidate_mean: f64,
    pub candidate_var: f64,
}

impl LikelihoodRatio {
    /// `P(r_bar | eq) / P(r_bar | candidate)`; may overflow to infinity.
    pub fn ratio(&self) -> f64 {
        self.log_ratio.exp()
    }
}

fn normal_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((x - mean).powi(2) / var + (2.0 * std::f64::consts::PI * var).ln())
}

pub fn likelihood_ratio(radii: &[f64], candidate: &RadialParent) -> Result<LikelihoodRatio> {
    if radii.is_empty() {
        return Err(Error::SampleTooSmall { got: 0, need: 1 });
    }
    let n = radii.len() as f64;
    let mean = radii.iter().sum::<f64>() / n;
    let (m_eq, v_eq) = RadialParent::Equilibrium.moments()?;
    let (m_c, v_c) = candidate.moments()?;
    let log_ratio = normal_log_pdf(mean, m_eq, v_eq / n) - normal_log_pdf(mean, m_c, v_c / n);
    Ok(LikelihoodRatio { log_ratio, candidate_mean: m_c, candidate_var: v_c })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub stat: f64,
    pub dof: usize,
    pub p: f64,
}

/// Pearson test against `p_eq` on `EQ_BINS` equiprobable bins.
pub fn chi_square_eq(radii: &[f64]) -> ChiSquare {
    let edges: Vec<f64> = (1..EQ_BINS).map(|k| quantile_eq(k as f64 / EQ_BINS as f64)).collect();
    let mut obs = vec![0.0; EQ_BINS];
    for &r in radii {
        obs[edges.partition_point(|&e| e <= r)] += 1.0;
    }
    let exp = vec![radii.len() as f64 / EQ_BINS as f64; EQ_BINS];
    let (stat, dof) = stats::chi_square(&obs, &exp, 0);
    ChiSquare { stat, dof, p: stats::chi2_sf(stat, dof) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsTest {
    pub d: f64,
    pub p: f64,
}

pub fn ks_eq(radii: &[f64]) -> KsTest {
    let d = stats::ks_statistic(radii, cdf_eq);
    KsTest { d, p: stats::ks_pvalue(d, radii.len()) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParentFit {
    pub lambda: f64,
    pub std_err: f64,
    /// 95% interval from the curvature of the log-likelihood.
    pub ci: (f64, f64),
    pub gof: ChiSquare,
    pub log_likelihood: f64,
}

/// Bin edges in units of the sample mean. In these units the binned
/// likelihood of `p_lambda` depends on `lambda r_bar` only, which makes the
/// fit exactly scale-equivariant.
fn relative_edges(n: usize) -> Vec<f64> {
    let k = (n / 50).clamp(10, 50);
    (1..k).map(|j| quantile_eq(j as f64 / k as f64) / MU_EQ).collect()
}

fn bin_probs(mu: f64, edges: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(edges.len() + 1);
    let mut prev = 0.0;
    for &e in edges {
        let c = cdf_eq(mu * e);
        p.push(c - prev);
        prev = c;
    }
    p.push(1.0 - prev);
    p
}

fn log_likelihood(mu: f64, counts: &[f64], edges: &[f64]) -> f64 {
    bin_probs(mu, edges)
        .iter()
        .zip(counts)
        .map(|(&p, &c)| if c > 0.0 { c * p.max(1e-300).ln() } else { 0.0 })
        .sum()
}

/// Maximum binned-likelihood `lambda` within the scaled family.
pub fn fit_parent(sample: &RadialSample) -> Result<ParentFit> {
    if !sample.parent.is_static() {
        return Err(Error::TimeDependentParent);
    }
    fit_radii(&sample.radii)
}

/// As [`fit_parent`] for bare radii of a static parent.
pub fn fit_radii(radii: &[f64]) -> Result<ParentFit> {
    let n = radii.len();
    if n < MIN_FIT {
        return Err(Error::SampleTooSmall { got: n, need: MIN_FIT });
    }
    let mean = radii.iter().sum::<f64>() / n as f64;
    if !(mean > 0.0) {
        return Err(Error::param("radii", "must be positive"));
    }
    let edges = relative_edges(n);
    let mut counts = vec![0.0; edges.len() + 1];
    for &r in radii {
        counts[edges.partition_point(|&e| e <= r / mean)] += 1.0;
    }
    // lambda r_bar is near 3/2 throughout the family, so a fixed window in mu
    // covers every lambda in range
    let (mu_lo, mu_hi) = (0.05, 20.0);
    let (mu, best) = stats::golden_section(|m| -log_likelihood(m, &counts, &edges), mu_lo, mu_hi, 1e-8);
    let lambda = mu / mean;
    if lambda < LAMBDA_RANGE.0 || lambda > LAMBDA_RANGE.1 || mu - mu_lo < 1e-6 || mu_hi - mu < 1e-6 {
        return Err(Error::BoundaryHit { value: lambda });
    }
    let h = 1e-3 * mu;
    let f = |m: f64| -log_likelihood(m, &counts, &edges);
    let curvature = (f(mu + h) - 2.0 * f(mu) + f(mu - h)) / (h * h);
    let std_err = 1.0 / (mean * curvature.max(1e-300).sqrt());
    let exp: Vec<f64> = bin_probs(mu, &edges).iter().map(|p| p * n as f64).collect();
    let (stat, dof) = stats::chi_square(&counts, &exp, 1);
    Ok(ParentFit {
        lambda,
        std_err,
        ci: (lambda - 1.96 * std_err, lambda + 1.96 * std_err),
        gof: ChiSquare { stat, dof, p: stats::chi2_sf(stat, dof) },
        log_likelihood: -best,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Equilibrium,
    Nonequilibrium,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleReport {
    pub n: usize,
    pub mean: f64,
    pub std_err: f64,
    pub z: f64,
    pub p_z: f64,
    pub chi2: ChiSquare,
    pub ks: KsTest,
    pub candidate: RadialParent,
    pub likelihood: LikelihoodRatio,
    pub fit: Option<ParentFit>,
    pub verdict: Verdict,
}

/// Runs every test. The likelihood ratio is taken against `candidate`, or
/// against the fitted parent when none is given.
pub fn analyze(sample: &RadialSample, candidate: Option<RadialParent>, threshold: f64) -> Result<SampleReport> {
    let radii = &sample.radii;
    let mt = clt_mean_test(radii)?;
    let fit = if sample.parent.is_static() && radii.len() >= MIN_FIT {
        match fit_radii(radii) {
            Ok(f) => Some(f),
            Err(Error::BoundaryHit { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let candidate = match (candidate, &fit) {
        (Some(c), _) => c,
        (None, Some(f)) => RadialParent::Scaled { lambda: f.lambda },
        (None, None) => RadialParent::Equilibrium,
    };
    let likelihood = likelihood_ratio(radii, &candidate)?;
    let verdict = if likelihood.log_ratio < -threshold {
        Verdict::Nonequilibrium
    } else if likelihood.log_ratio > threshold {
        Verdict::Equilibrium
    } else {
        Verdict::Inconclusive
    };
    Ok(SampleReport {
        n: mt.n,
        mean: mt.mean,
        std_err: mt.std_err,
        z: mt.z,
        p_z: mt.p,
        chi2: chi_square_eq(radii),
        ks: ks_eq(radii),
        candidate,
        likelihood,
        fit,
        verdict,
    })
}

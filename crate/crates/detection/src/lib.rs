//! Deciding from a finite sample of a ground-state cloud whether its radial
//! parent distribution is the equilibrium `4 r^2 e^{-2r}`, and estimating the
//! most likely parent within the scaled family `lambda p_eq(lambda r)`.
//!
//! Lengths are in Bohr radii.

pub mod analysis;
pub mod model;
pub mod sampling;

pub use analysis::{
    analyze, chi_square_eq, clt_mean_test, fit_parent, fit_radii, ks_eq, likelihood_ratio, ChiSquare, KsTest,
    LikelihoodRatio, MeanTest, ParentFit, SampleReport, Verdict, DEFAULT_LOG_RATIO_THRESHOLD,
};
pub use model::{cdf_eq, pdf_eq, quantile_eq, RadialParent, MU_EQ, VAR_EQ};
pub use sampling::{draw_cloud_sample, repetition_seed, RadialSample};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use subquantum_core::Result;

/// A batch of independent cloud experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub parent: RadialParent,
    pub n_cloud: usize,
    pub n_sample: usize,
    pub repetitions: usize,
    /// Likelihood-ratio candidate; the fitted parent when absent.
    pub candidate: Option<RadialParent>,
    pub log_ratio_threshold: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            parent: RadialParent::Equilibrium,
            n_cloud: 100_000,
            n_sample: 10_000,
            repetitions: 100,
            candidate: None,
            log_ratio_threshold: DEFAULT_LOG_RATIO_THRESHOLD,
        }
    }
}

/// One report per repetition, in repetition order.
pub fn run_repetitions(cfg: &DetectionConfig, seed: u64) -> Result<Vec<SampleReport>> {
    (0..cfg.repetitions)
        .into_par_iter()
        .map(|k| {
            let s = draw_cloud_sample(&cfg.parent, cfg.n_cloud, cfg.n_sample, repetition_seed(seed, k))?;
            analyze(&s, cfg.candidate, cfg.log_ratio_threshold)
        })
        .collect()
}

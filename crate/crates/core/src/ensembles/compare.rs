//! Ensemble-versus-density comparison on coarse-graining cells.

use serde::Serialize;

use super::coarse::{h_from_counts, CoarseGraining, MIN_PARTICLES};
use super::density::TabulatedDensity;
use super::Ensemble;
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub particles: usize,
    pub cells: usize,
    /// `(1/2) sum |P_c - Q_c|`.
    pub total_variation: f64,
    /// One-sample KS distance; in two dimensions the larger of the two
    /// marginal distances.
    pub ks: f64,
    pub ks_p: f64,
    pub chi2: f64,
    pub dof: usize,
    pub chi2_p: f64,
    pub h: f64,
}

/// Compares `ens` with the reference density on the cells of `cg`.
pub fn compare(ens: &Ensemble, reference: &TabulatedDensity, cg: &CoarseGraining) -> Result<Comparison> {
    if ens.dim() != reference.dim() || ens.dim() != cg.dim() {
        return Err(Error::GridMismatch("ensemble, density and cells differ in dimension".into()));
    }
    if ens.len() < MIN_PARTICLES {
        return Err(Error::SampleTooSmall { got: ens.len(), need: MIN_PARTICLES });
    }
    let masses = cg.masses(reference)?;
    let counts = cg.histogram(ens);
    let n = ens.len();
    let tv = total_variation(&counts, n, &masses);
    let obs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let exp: Vec<f64> = masses.iter().map(|&q| q * n as f64).collect();
    let (chi2, dof) = stats::chi_square(&obs, &exp, 0);
    let mut ks: f64 = 0.0;
    for d in 0..ens.dim() {
        let xs: Vec<f64> = ens.points().chunks_exact(ens.dim()).map(|p| p[d]).collect();
        let m = reference.marginal(d);
        ks = ks.max(stats::ks_statistic(&xs, |x| m.cdf(x)));
    }
    Ok(Comparison {
        particles: n,
        cells: cg.len(),
        total_variation: tv,
        ks,
        ks_p: stats::ks_pvalue(ks, n),
        chi2,
        dof,
        chi2_p: stats::chi2_sf(chi2, dof),
        h: h_from_counts(&counts, &masses),
    })
}

/// Total variation between empirical counts (out of `n`) and cell masses.
pub fn total_variation(counts: &[u64], n: usize, masses: &[f64]) -> f64 {
    0.5 * counts.iter().zip(masses).map(|(&c, &q)| (c as f64 / n as f64 - q).abs()).sum::<f64>()
}

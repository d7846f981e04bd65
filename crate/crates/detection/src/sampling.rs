//! Seeded cloud realizations and without-replacement subsamples.

use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;
use subquantum_core::rng;
use subquantum_core::{Error, Result};

use crate::model::RadialParent;

const CLOUD_STREAM: u64 = 0x636c_6f75;
const PICK_STREAM: u64 = 0x7069_636b;

/// Radii measured on `N'` atoms of a cloud of `N` atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialSample {
    pub parent: RadialParent,
    pub n_cloud: usize,
    pub seed: u64,
    pub radii: Vec<f64>,
}

/// Realizes a cloud of `n_cloud` radii from `parent` and measures
/// `n_sample` distinct atoms of it. Requires `n_sample <= n_cloud / 10`.
pub fn draw_cloud_sample(parent: &RadialParent, n_cloud: usize, n_sample: usize, seed: u64) -> Result<RadialSample> {
    parent.validate()?;
    if n_sample > n_cloud {
        return Err(Error::param("n_sample", format!("{n_sample} exceeds the cloud size {n_cloud}")));
    }
    if n_sample == 0 || n_sample * 10 > n_cloud {
        return Err(Error::param("n_sample", format!("need 1 <= N' <= N/10, got N' = {n_sample}, N = {n_cloud}")));
    }
    let mut cloud = vec![0.0; n_cloud];
    let cloud_seed = rng::derive(seed, CLOUD_STREAM);
    cloud.par_chunks_mut(rng::BLOCK).enumerate().for_each(|(b, chunk)| {
        let mut r = rng::stream(cloud_seed, b as u64);
        for x in chunk {
            *x = parent.draw(&mut r);
        }
    });
    let mut pick = rng::stream(rng::derive(seed, PICK_STREAM), 0);
    let mut idx = index::sample(&mut pick, n_cloud, n_sample).into_vec();
    idx.sort_unstable();
    let radii = idx.into_iter().map(|i| cloud[i]).collect();
    Ok(RadialSample { parent: *parent, n_cloud, seed, radii })
}

/// Seed of repetition `rep` of a run seeded with `seed`.
pub fn repetition_seed(seed: u64, rep: usize) -> u64 {
    rng::derive(seed, rep as u64)
}

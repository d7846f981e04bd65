use std::fmt::Write as _;

use serde::Serialize;
use subquantum_core::stats;
use subquantum_core::wavefunction::Wavefunction;
use subquantum_core::{Error, Result};

use crate::{BSetting, SettingRun};

/// `z*` with `2 k P(Z > z*) = alpha`.
pub fn bonferroni_threshold(k: usize, alpha: f64) -> f64 {
    let target = alpha / (2.0 * k as f64);
    let (mut lo, mut hi) = (0.0, 40.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if stats::normal_sf(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `int |psi|^2 dx_B` on the A-axis grid points.
pub fn quantum_marginal_a(psi: &Wavefunction) -> Vec<f64> {
    let grid = psi.grid();
    let ny = grid.axis(1).n;
    let dy = grid.axis(1).spacing();
    psi.density().chunks_exact(ny).map(|row| row.iter().sum::<f64>() * dy).collect()
}

/// A-marginals for two B-settings at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalReport {
    pub settings: [BSetting; 2],
    pub time: f64,
    pub pairs: usize,
    /// Histogram edges; entry 0 and the last entry of each marginal hold
    /// the mass below and above them.
    pub edges: Vec<f64>,
    pub marginals: [Vec<f64>; 2],
    pub difference: Vec<f64>,
    /// Per-bin McNemar statistic `(n_setting - n_reference) / sqrt(n_moved)`,
    /// with `n_moved` the pairs whose bin differs between the settings.
    pub z: Vec<f64>,
    pub max_z: f64,
    /// Largest `|difference|` over the binomial error of two independent
    /// samples of the same size. Ignores the pairing.
    pub unpaired_max_z: f64,
    /// Two-sided Bonferroni threshold at family-wise level 0.05.
    pub threshold: f64,
    /// `max |rho_A^none - rho_A^setting|` of the quantum marginals.
    pub quantum_difference: f64,
}

impl SignalReport {
    pub fn compare(a: &SettingRun, b: &SettingRun, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::param("bins", "need at least one bin"));
        }
        if a.ensemble.len() != b.ensemble.len() || a.ensemble.is_empty() {
            return Err(Error::param("ensembles", "settings must carry the same non-empty pair count"));
        }
        let qa = quantum_marginal_a(&a.psi);
        let qb = quantum_marginal_a(&b.psi);
        let quantum_difference = qa.iter().zip(&qb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);

        let xs = a.psi.grid().axis(0).points();
        let dx = a.psi.grid().axis(0).spacing();
        let m0: f64 = qa.iter().sum::<f64>() * dx;
        let mean = qa.iter().zip(&xs).map(|(p, x)| p * x).sum::<f64>() * dx / m0;
        let var = qa.iter().zip(&xs).map(|(p, x)| p * (x - mean).powi(2)).sum::<f64>() * dx / m0;
        let (lo, hi) = (mean - 4.0 * var.sqrt(), mean + 4.0 * var.sqrt());
        let h = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * h).collect();

        let bin_of = |x: f64| {
            let u = (x - lo) / h;
            if u < 0.0 {
                0
            } else if u >= bins as f64 {
                bins + 1
            } else {
                u as usize + 1
            }
        };
        let n = a.ensemble.len() as f64;
        // Pairs are shared between the settings, so each bin is compared by
        // McNemar's statistic on the pairs that leave or enter it.
        let mut counts = [vec![0.0; bins + 2], vec![0.0; bins + 2]];
        let mut moved = vec![0.0f64; bins + 2];
        for (xa, xb) in a.ensemble.coordinate(0).into_iter().zip(b.ensemble.coordinate(0)) {
            let (ka, kb) = (bin_of(xa), bin_of(xb));
            counts[0][ka] += 1.0;
            counts[1][kb] += 1.0;
            if ka != kb {
                moved[ka] += 1.0;
                moved[kb] += 1.0;
            }
        }
        let z: Vec<f64> = (0..bins + 2)
            .map(|k| if moved[k] > 0.0 { (counts[1][k] - counts[0][k]) / moved[k].sqrt() } else { 0.0 })
            .collect();
        let [pa, pb] = counts.map(|c| c.into_iter().map(|v| v / n).collect::<Vec<f64>>());
        let difference: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| y - x).collect();
        let max_z = z.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let unpaired_max_z = pa
            .iter()
            .zip(&pb)
            .map(|(&x, &y)| {
                let se = ((x * (1.0 - x) + y * (1.0 - y)) / n).sqrt();
                if se > 0.0 {
                    ((y - x) / se).abs()
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        Ok(SignalReport {
            settings: [a.setting, b.setting],
            time: a.psi.time(),
            pairs: a.ensemble.len(),
            edges,
            marginals: [pa, pb],
            difference,
            z,
            max_z,
            unpaired_max_z,
            threshold: bonferroni_threshold(bins + 2, 0.05),
            quantum_difference,
        })
    }

    pub fn signal_detected(&self) -> bool {
        self.max_z > self.threshold
    }

    /// Columnar text, one row per histogram entry including the two
    /// overflow rows.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# signal t={} pairs={} max_z={} unpaired_max_z={} threshold={}",
            self.time, self.pairs, self.max_z, self.unpaired_max_z, self.threshold);
        s.push_str("# lo hi p_reference p_setting difference z\n");
        let k = self.edges.len() - 1;
        for i in 0..k + 2 {
            let lo = if i == 0 { f64::NEG_INFINITY } else { self.edges[i - 1] };
            let hi = if i == k + 1 { f64::INFINITY } else { self.edges[i] };
            let _ = writeln!(
                s,
                "{lo:e} {hi:e} {:e} {:e} {:e} {:e}",
                self.marginals[0][i], self.marginals[1][i], self.difference[i], self.z[i]
            );
        }
        s
    }
}

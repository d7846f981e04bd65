use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};

/// Hamiltonian terms beyond the kinetic energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Potential {
    Free,
    /// Infinite square well; the grid's Dirichlet axes are the walls.
    Well,
    /// `omega^2 |x - center|^2 / 2`.
    Harmonic { omega: f64, center: Vec<f64> },
    /// `a x p_y` with the free Hamiltonians neglected.
    PointerCoupling { coupling: f64 },
    /// Values on the grid points, row-major.
    Tabulated { values: Vec<f64> },
}

impl Potential {
    /// Whether propagation uses kinetic plus potential splitting.
    pub fn is_kinetic(&self) -> bool {
        !matches!(self, Potential::PointerCoupling { .. })
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        match self {
            Potential::Free => Ok(()),
            Potential::Well => {
                if grid.axes().iter().all(|a| a.boundary == Boundary::Dirichlet) {
                    Ok(())
                } else {
                    Err(Error::param("potential", "well needs hard-walled (dirichlet) axes"))
                }
            }
            Potential::Harmonic { omega, center } => {
                if !omega.is_finite() || center.len() != grid.dim() {
                    return Err(Error::param("potential", "harmonic needs finite omega and one center per axis"));
                }
                Ok(())
            }
            Potential::PointerCoupling { coupling } => {
                if grid.dim() != 2 {
                    return Err(Error::param("potential", "pointer coupling acts on a 2D (x, y) grid"));
                }
                if grid.axes().iter().any(|a| a.boundary != Boundary::Periodic) {
                    return Err(Error::param("potential", "pointer coupling needs periodic axes"));
                }
                if !coupling.is_finite() {
                    return Err(Error::param("coupling", "must be finite"));
                }
                Ok(())
            }
            Potential::Tabulated { values } => {
                if values.len() != grid.len() {
                    return Err(Error::GridMismatch(format!("{} potential values for {} points", values.len(), grid.len())));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::param("potential", "tabulated values must be finite"));
                }
                Ok(())
            }
        }
    }

    /// Real potential on the grid points (zero for the well interior and
    /// for the pointer coupling, which has no position-diagonal part).
    pub fn values(&self, grid: &Grid) -> Vec<f64> {
        match self {
            Potential::Free | Potential::Well | Potential::PointerCoupling { .. } => vec![0.0; grid.len()],
            Potential::Harmonic { omega, center } => {
                let mut x = vec![0.0; grid.dim()];
                (0..grid.len())
                    .map(|i| {
                        grid.point(i, &mut x);
                        0.5 * omega * omega * x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>()
                    })
                    .collect()
            }
            Potential::Tabulated { values } => values.clone(),
        }
    }

    /// Whether the potential vanishes identically (free evolution is then
    /// exact in a single Fourier step).
    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Free | Potential::Well)
    }
}

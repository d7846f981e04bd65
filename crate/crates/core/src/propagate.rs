//! Schrödinger propagation on grids.
//!
//! Kinetic-plus-potential Hamiltonians use Strang splitting
//! `e^{-iV dt/2} e^{-iT dt} e^{-iV dt/2}` with the kinetic factor applied in
//! Fourier space. When the potential vanishes the kinetic factor is exact and
//! is applied once for the whole interval. The pointer coupling `a x p_y` is
//! propagated exactly as the shear `Psi(x, y, t) = Psi0(x, y - a x t)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::Potential;
use crate::spectral::Spectral;
use crate::wavefunction::Wavefunction;

/// Largest probability tolerated on the periodic margins.
pub const MARGIN_MASS_LIMIT: f64 = 1e-6;

/// Reusable propagator for one grid and potential.
#[derive(Clone)]
pub struct Propagator {
    grid: Grid,
    potential: Potential,
    spectral: Spectral,
    values: Vec<f64>,
    half_phase: Option<(f64, Vec<Complex64>)>,
}

impl Propagator {
    pub fn new(grid: &Grid, potential: &Potential) -> Result<Self> {
        potential.validate(grid)?;
        Ok(Propagator {
            grid: grid.clone(),
            potential: potential.clone(),
            spectral: Spectral::new(grid),
            values: potential.values(grid),
            half_phase: None,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    fn potential_half_step(&mut self, amps: &mut [Complex64], dt: f64) {
        let stale = self.half_phase.as_ref().is_none_or(|(h, _)| *h != dt);
        if stale {
            let ph = self.values.iter().map(|&v| Complex64::from_polar(1.0, -0.5 * v * dt)).collect();
            self.half_phase = Some((dt, ph));
        }
        let (_, ph) = self.half_phase.as_ref().expect("phase cached");
        for (a, p) in amps.iter_mut().zip(ph) {
            *a *= p;
        }
    }

    /// Advances `psi` by `steps` steps of `dt` in place.
    pub fn advance(&mut self, psi: &mut Wavefunction, dt: f64, steps: usize) -> Result<()> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch("wavefunction grid differs from propagator grid".into()));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        if steps == 0 {
            return Ok(());
        }
        let total = dt * steps as f64;
        match self.potential.clone() {
            Potential::PointerCoupling { coupling } => {
                self.spectral.shear(psi.amplitudes_mut(), 1, |x| coupling * x * total);
            }
            p if p.is_zero() => self.spectral.kinetic(psi.amplitudes_mut(), total),
            _ => {
                for _ in 0..steps {
                    self.potential_half_step(psi.amplitudes_mut(), dt);
                    self.spectral.kinetic(psi.amplitudes_mut(), dt);
                    self.potential_half_step(psi.amplitudes_mut(), dt);
                }
            }
        }
        psi.set_time(psi.time() + total);
        let mass = psi.margin_mass();
        if mass > MARGIN_MASS_LIMIT {
            return Err(Error::DomainOverflow { mass, time: psi.time() });
        }
        Ok(())
    }

    /// Advances `psi` to absolute time `t` with steps no longer than `dt_max`.
    pub fn advance_to(&mut self, psi: &mut Wavefunction, t: f64, dt_max: f64) -> Result<()> {
        let span = t - psi.time();
        if span < 0.0 {
            return Err(Error::param("t", "cannot propagate backwards"));
        }
        if span == 0.0 {
            return Ok(());
        }
        let steps = (span / dt_max).ceil().max(1.0) as usize;
        let start = psi.time();
        self.advance(psi, span / steps as f64, steps)?;
        psi.set_time(start + span);
        Ok(())
    }

    /// Applies the local phase `exp(-i phase(x))`, an impulsive kick.
    pub fn imprint_phase(psi: &mut Wavefunction, phase: impl Fn(&[f64]) -> f64) {
        let grid = psi.grid().clone();
        let mut x = vec![0.0; grid.dim()];
        for (i, a) in psi.amplitudes_mut().iter_mut().enumerate() {
            grid.point(i, &mut x);
            *a *= Complex64::from_polar(1.0, -phase(&x));
        }
    }

    /// Spectral Laplacian of `psi`.
    pub(crate) fn laplacian(&self, amps: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        for d in 0..self.grid.dim() {
            for (o, v) in out.iter_mut().zip(self.spectral.second_derivative(amps, d)) {
                *o += v;
            }
        }
        out
    }

    /// `<psi|H|psi>` for kinetic-plus-potential Hamiltonians.
    pub fn energy(&self, psi: &Wavefunction) -> Result<f64> {
        if !self.potential.is_kinetic() {
            return Err(Error::param("potential", "energy is defined for kinetic Hamiltonians"));
        }
        let lap = self.laplacian(psi.amplitudes());
        let e: f64 = psi
            .amplitudes()
            .iter()
            .zip(&lap)
            .zip(&self.values)
            .map(|((a, l), v)| (a.conj() * (-0.5 * l)).re + v * a.norm_sqr())
            .sum();
        Ok(e * self.grid.cell_volume())
    }

    /// `|| H phi - E phi ||` (grid L2 norm).
    pub fn eigen_residual(&self, psi: &Wavefunction, energy: f64) -> f64 {
        let lap = self.laplacian(psi.amplitudes());
        let r: f64 = psi
            .amplitudes()
            .iter()
            .zip(&lap)
            .zip(&self.values)
            .map(|((a, l), v)| (-0.5 * l + a * v - a * energy).norm_sqr())
            .sum();
        (r * self.grid.cell_volume()).sqrt()
    }
}

/// Returns `psi(t + steps dt)`.
pub fn propagate(psi: &Wavefunction, potential: &Potential, dt: f64, steps: usize) -> Result<Wavefunction> {
    psi.check_normalized()?;
    if !potential.is_kinetic() && psi.grid().dim() != 2 {
        return Err(Error::param("psi", "pointer coupling needs a 2D wavefunction"));
    }
    let mut prop = Propagator::new(psi.grid(), potential)?;
    let mut out = psi.clone();
    prop.advance(&mut out, dt, steps)?;
    out.check_normalized()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::EigenBasis;
    use crate::grid::Axis;
    use std::f64::consts::PI;

    #[test]
    fn rejects_unnormalized_input_and_bad_dt() {
        let g = Grid::line(Axis::periodic(-10.0, 10.0, 64).unwrap());
        let mut psi = Wavefunction::gaussian(g, &[(0.0, 1.0, 0.0)]).unwrap();
        assert!(propagate(&psi, &Potential::Free, 0.0, 1).is_err());
        psi.amplitudes_mut()[32] *= 3.0;
        assert!(matches!(propagate(&psi, &Potential::Free, 0.1, 1), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn overflow_is_flagged() {
        let g = Grid::line(Axis::periodic(-10.0, 10.0, 256).unwrap());
        let psi = Wavefunction::gaussian(g, &[(0.0, 0.5, 6.0)]).unwrap();
        assert!(matches!(propagate(&psi, &Potential::Free, 0.1, 20), Err(Error::DomainOverflow { .. })));
    }

    #[test]
    fn well_eigenstate_is_stationary() {
        let b = EigenBasis::well(PI).unwrap();
        let g = Grid::line(b.axis(256).unwrap());
        let phi = b.eigenstate(3, &g).unwrap();
        let out = propagate(&phi, &Potential::Well, 0.37, 10).unwrap();
        for (a, c) in phi.density().iter().zip(out.density()) {
            assert!((a - c).abs() < 1e-8);
        }
    }

    #[test]
    fn pointer_coupling_rejects_1d() {
        let g = Grid::line(Axis::periodic(-10.0, 10.0, 64).unwrap());
        let psi = Wavefunction::gaussian(g, &[(0.0, 1.0, 0.0)]).unwrap();
        assert!(propagate(&psi, &Potential::PointerCoupling { coupling: 1.0 }, 0.1, 1).is_err());
    }
}

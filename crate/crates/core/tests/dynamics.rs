use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use subquantum_core::basis::{EigenBasis, ModeSuperposition};
use subquantum_core::field::NodeClamp;
use subquantum_core::grid::{Axis, Grid};
use subquantum_core::potential::Potential;
use subquantum_core::propagate::{propagate, Propagator};
use subquantum_core::trajectory::{evolve, follow, integrate_trajectory, AnalyticGuide, StepOptions};
use subquantum_core::velocity::{current_over_density, velocity_field, GridSnapshot};
use subquantum_core::wavefunction::Wavefunction;

fn wide_clamp() -> NodeClamp {
    NodeClamp { eps_node: 0.0, v_max: f64::INFINITY }
}

/// Two equal-weight lowest modes of the well `[0, pi]`, velocity from the
/// Wronskian `-a1 a2 sin((E2 - E1) t) (phi1 phi2' - phi2 phi1') / |psi|^2`.
fn two_mode_velocity(x: f64, t: f64) -> f64 {
    let c = (2.0 / PI).sqrt();
    let (p1, p2) = (c * x.sin(), c * (2.0 * x).sin());
    let (d1, d2) = (c * x.cos(), 2.0 * c * (2.0 * x).cos());
    let beat = 2.0 - 0.5;
    let rho = 0.5 * (p1 * p1 + p2 * p2 + 2.0 * p1 * p2 * (beat * t).cos());
    -0.5 * (beat * t).sin() * (p1 * d2 - p2 * d1) / rho
}

fn two_mode() -> ModeSuperposition {
    ModeSuperposition::well_1d(EigenBasis::well(PI).unwrap(), &[1, 2], &[0.0, 0.0]).unwrap()
}

/// Classical RK4 on the closed-form field.
fn rk4(x0: f64, t_end: f64, steps: usize) -> f64 {
    let h = t_end / steps as f64;
    let mut x = x0;
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = two_mode_velocity(x, t);
        let k2 = two_mode_velocity(x + 0.5 * h * k1, t + 0.5 * h);
        let k3 = two_mode_velocity(x + 0.5 * h * k2, t + 0.5 * h);
        let k4 = two_mode_velocity(x + h * k3, t + h);
        x += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    }
    x
}

#[test]
fn third_well_mode_is_stationary() {
    let b = EigenBasis::well(PI).unwrap();
    let g = Grid::line(b.axis(256).unwrap());
    let phi = b.eigenstate(3, &g).unwrap();
    let prop = Propagator::new(&g, &Potential::Well).unwrap();
    assert!(prop.eigen_residual(&phi, b.energy(3)) < 1e-8);
    let out = propagate(&phi, &Potential::Well, 0.05, 200).unwrap();
    let max = phi.density().iter().zip(out.density()).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
    assert!(max < 1e-8, "{max}");
}

#[test]
fn pointer_coupling_shears_the_packet() {
    let a = 1.0;
    let t = 0.25;
    let g = Grid::plane(Axis::periodic(-8.0, 8.0, 128).unwrap(), Axis::periodic(-8.0, 8.0, 128).unwrap());
    let psi = Wavefunction::gaussian(g.clone(), &[(0.0, 1.0, 0.0), (0.0, 0.7, 0.0)]).unwrap();
    let out = propagate(&psi, &Potential::PointerCoupling { coupling: a }, t / 10.0, 10).unwrap();
    let want = Wavefunction::from_fn(g, |p| {
        let y = p[1] - a * p[0] * t;
        Complex64::new((-(p[0] * p[0]) / 4.0 - y * y / (4.0 * 0.49)).exp(), 0.0)
    })
    .unwrap();
    let worst = out.amplitudes().iter().zip(want.amplitudes()).map(|(u, w)| (u - w).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn free_packet_spreads_at_the_closed_form_rate() {
    let g = Grid::line(Axis::periodic(-40.0, 40.0, 2048).unwrap());
    let sigma0 = 1.0;
    let psi = Wavefunction::gaussian(g.clone(), &[(0.0, sigma0, 0.0)]).unwrap();
    for t in [0.5, 2.0, 4.0] {
        let out = propagate(&psi, &Potential::Free, t / 8.0, 8).unwrap();
        let h = g.cell_volume();
        let xs = g.axis(0).points();
        let var: f64 = out.density().iter().zip(&xs).map(|(r, x)| r * x * x * h).sum();
        let want = sigma0 * (1.0 + t * t / (4.0 * sigma0.powi(4))).sqrt();
        assert!((var.sqrt() - want).abs() < 1e-4, "t={t}: {} vs {want}", var.sqrt());
    }
}

#[test]
fn real_wavefunction_has_no_velocity() {
    let b = EigenBasis::well(PI).unwrap();
    let g = Grid::line(b.axis(128).unwrap());
    let phi = b.eigenstate(2, &g).unwrap();
    let v = velocity_field(&phi, NodeClamp::for_step(PI, 0.01)).unwrap();
    // The node of phi_2 sits on a grid point, where the ratio is 0/0.
    let dens = phi.density();
    let peak = dens.iter().cloned().fold(0.0, f64::max);
    for (c, d) in v.components[0].iter().zip(&dens) {
        if *d >= NodeClamp::DEFAULT_EPS_NODE * peak {
            assert!(c.abs() < 1e-10, "{c}");
        }
    }
}

#[test]
fn plane_packet_moves_at_its_wavenumber() {
    let k = 1.5;
    let g = Grid::line(Axis::periodic(-40.0, 40.0, 1024).unwrap());
    let psi = Wavefunction::gaussian(g, &[(0.0, 3.0, k)]).unwrap();
    let v = velocity_field(&psi, wide_clamp()).unwrap();
    let dens = psi.density();
    let peak = dens.iter().cloned().fold(0.0, f64::max);
    for (vi, d) in v.components[0].iter().zip(&dens) {
        if *d > 1e-3 * peak {
            assert!((vi - k).abs() < 1e-6, "{vi}");
        }
    }
}

#[test]
fn two_mode_velocity_matches_the_wronskian() {
    let sup = two_mode();
    let want = two_mode_velocity(1.0, 1.0);
    assert!((sup.velocity_at(&[1.0], 1.0)[0] - want).abs() < 1e-10);
    let g = sup.grid(256).unwrap();
    let snap = GridSnapshot::new(&sup.to_wavefunction(&g, 1.0).unwrap());
    let mut v = [0.0];
    snap.velocity_at(&[1.0], &mut v);
    assert!((v[0] - want).abs() < 1e-5, "{} vs {want}", v[0]);
}

#[test]
fn current_over_density_agrees_with_the_phase_gradient() {
    let g = Grid::plane(Axis::periodic(-10.0, 10.0, 128).unwrap(), Axis::periodic(-10.0, 10.0, 128).unwrap());
    let a = Wavefunction::gaussian(g.clone(), &[(-1.0, 1.2, 0.7), (0.5, 1.0, -0.3)]).unwrap();
    let b = Wavefunction::gaussian(g.clone(), &[(1.0, 1.0, -0.4), (-0.5, 1.3, 0.9)]).unwrap();
    let mut psi =
        Wavefunction::new(g, a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| x + y * Complex64::new(0.0, 0.6)).collect(), 0.0)
            .unwrap();
    psi.normalize().unwrap();
    let v = velocity_field(&psi, wide_clamp()).unwrap();
    let j = current_over_density(&psi);
    let dens = psi.density();
    let peak = dens.iter().cloned().fold(0.0, f64::max);
    for d in 0..2 {
        for i in 0..dens.len() {
            if dens[i] > 1e-6 * peak {
                assert!((v.components[d][i] - j[d][i]).abs() < 1e-8, "{} {} {}", v.components[d][i], j[d][i], dens[i] / peak);
            }
        }
    }
}

#[test]
fn pointer_trajectory_is_exact() {
    let g = Grid::plane(Axis::periodic(-4.0, 4.0, 64).unwrap(), Axis::periodic(-4.0, 4.0, 64).unwrap());
    let psi = Wavefunction::gaussian(g, &[(0.0, 0.5, 0.0), (0.0, 0.5, 0.0)]).unwrap();
    let tr = integrate_trajectory(&psi, &Potential::PointerCoupling { coupling: 1.0 }, &[1.0, 0.0], 2.0, 0.05).unwrap();
    for i in 0..tr.len() {
        let p = tr.position(i);
        assert!((p[0] - 1.0).abs() < 1e-9 && (p[1] - tr.times[i]).abs() < 1e-9);
    }
}

#[test]
fn eigenstate_trajectory_stays_put() {
    let b = EigenBasis::well(PI).unwrap();
    let g = Grid::line(b.axis(128).unwrap());
    let phi = b.eigenstate(3, &g).unwrap();
    let tr = integrate_trajectory(&phi, &Potential::Well, &[1.3], 3.0, 0.05).unwrap();
    assert!(tr.positions.iter().all(|&x| (x - 1.3).abs() < 1e-9));
}

#[test]
fn two_mode_trajectory_matches_richardson_reference() {
    let dt: f64 = 0.01;
    let t_end: f64 = 2.0;
    let x0 = PI / 2.0;
    let steps = (t_end / (dt / 16.0)).round() as usize;
    let reference = (16.0 * rk4(x0, t_end, 2 * steps) - rk4(x0, t_end, steps)) / 15.0;
    let mut guide = AnalyticGuide::new(two_mode(), 0.0);
    let tr = follow(&mut guide, &[x0], t_end, &StepOptions::new(dt), &[t_end]).unwrap();
    let got = tr.position(0)[0];
    assert!((got - reference).abs() < 1e-5, "{got} vs {reference}");
}

#[test]
fn propagation_conserves_norm_and_energy() {
    let g = Grid::line(Axis::periodic(-12.0, 12.0, 512).unwrap());
    let pot = Potential::Harmonic { omega: 1.0, center: vec![0.0] };
    let mut psi = Wavefunction::gaussian(g.clone(), &[(1.0, 0.6, 0.8)]).unwrap();
    let mut prop = Propagator::new(&g, &pot).unwrap();
    let e0 = prop.energy(&psi).unwrap();
    prop.advance(&mut psi, 0.002, 1000).unwrap();
    assert!((psi.norm() - 1.0).abs() < 1e-9, "{}", psi.norm());
    let e1 = prop.energy(&psi).unwrap();
    assert!((e1 - e0).abs() < 1e-6 * e0.abs().max(1.0), "{e0} -> {e1}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn one_dimensional_trajectories_never_cross(phase in 0.0f64..(2.0 * PI), third in 0.1f64..1.0) {
        let b = EigenBasis::well(PI).unwrap();
        let sup = ModeSuperposition::new(
            vec![b],
            vec![
                subquantum_core::basis::Mode { quantum: [1, 0], amp: Complex64::new(1.0, 0.0) },
                subquantum_core::basis::Mode { quantum: [2, 0], amp: Complex64::from_polar(1.0, phase) },
                subquantum_core::basis::Mode { quantum: [3, 0], amp: Complex64::new(third, 0.0) },
            ],
        )
        .unwrap();
        let mut guide = AnalyticGuide::new(sup, 0.0);
        let mut pts: Vec<f64> = (0..100).map(|i| 0.2 + (PI - 0.4) * i as f64 / 99.0).collect();
        let mut ordered = true;
        evolve(&mut guide, &mut pts, 4.0, &StepOptions::new(0.01), &[1.0, 2.0, 3.0, 4.0], |_, x, _| {
            ordered &= x.windows(2).all(|w| w[0] < w[1]);
            Ok(())
        })
        .unwrap();
        prop_assert!(ordered);
    }
}

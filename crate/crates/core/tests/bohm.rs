use std::sync::Arc;

use bohmflow::bohm::*;
use bohmflow::dynamics::*;
use bohmflow::field::*;
use bohmflow::states::{GaussianPacket, Oscillator};
use bohmflow::Complex64;

fn line() -> Arc<SpatialGrid> {
    Arc::new(SpatialGrid::cube(1, 512, -20.0, 20.0, Boundary::Periodic).unwrap())
}

fn oscillator() -> ParticleSystem {
    ParticleSystem::single(1.0, 1, 1.0, Potential::harmonic(vec![1.0], vec![0.0])).unwrap()
}

fn free() -> ParticleSystem {
    ParticleSystem::single(1.0, 1, 1.0, Potential::free()).unwrap()
}

fn free_gaussian_record(dt: f64, stride: usize, t_end: f64) -> EvolutionRecord {
    let psi0 = GaussianPacket::new(0.0, 1.0, 0.0).sample(&line(), 0).unwrap();
    let cfg = EvolverConfig::new(dt, Scheme::SplitStepFourier, stride).unwrap();
    evolve_tdse(&psi0, &free(), &cfg, (t_end / dt).round() as usize).unwrap()
}

#[test]
fn stationary_state_trajectories_are_fixed_points() {
    let osc = Oscillator::natural();
    let grid = line();
    let dt = 0.01;
    let snaps: Vec<ComplexField> = (0..=40)
        .map(|k| {
            let phase = Complex64::from_polar(1.0, -osc.energy(0) * 5.0 * dt * k as f64);
            osc.sample_eigenfunction(0, &grid, 0).unwrap().scale(phase)
        })
        .collect();
    let exact = EvolutionRecord::from_snapshots(dt, 5, snaps);
    let psi0 = osc.sample_eigenfunction(0, &grid, 0).unwrap();
    let cfg = EvolverConfig::new(1e-3, Scheme::SplitStepFourier, 50).unwrap();
    let evolved = evolve_tdse(&psi0, &oscillator(), &cfg, 2000).unwrap();
    for (rec, tol) in [(&exact, 1e-9), (&evolved, 1e-6)] {
        for x0 in [-1.3, 0.0, 0.7, 2.2] {
            let traj = integrate_trajectory(rec, &[x0], &oscillator()).unwrap();
            let drift = traj.positions.iter().map(|p| (p[0] - x0).abs()).fold(0.0, f64::max);
            assert!(drift < tol, "{drift:e}");
            let res = newton_residual(&traj, rec, &oscillator()).unwrap();
            let worst = res.iter().cloned().fold(0.0, f64::max);
            assert!(worst < 1e-4, "{worst:e}");
        }
    }
    let sep = trajectory_separation(&exact, &[0.5], &[0.5 + 1e-3], &oscillator()).unwrap();
    assert!(sep.slope.abs() < 1e-6);
}

#[test]
fn free_gaussian_velocity_matches_analytic_field() {
    let rec = free_gaussian_record(1e-3, 250, 1.0);
    let g = GaussianPacket::new(0.0, 1.0, 0.0);
    for (snap, &t) in rec.snapshots.iter().zip(&rec.times) {
        let v = bohm_velocity(snap, &free(), 0).unwrap();
        for i in 0..snap.len() {
            let x = snap.grid().coordinate(0, i);
            if x.abs() < 5.0 {
                assert!((v.components[0].values()[i] - g.free_velocity(x, t, 1.0, 1.0)).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn free_gaussian_trajectories_follow_scaling_law() {
    let rec = free_gaussian_record(1e-3, 10, 1.0);
    let g = GaussianPacket::new(0.0, 1.0, 0.0);
    let history = VelocityHistory::from_record(&rec, &free(), DEFAULT_NODE_REL).unwrap();
    history.validate_stride().unwrap();
    for x0 in [-2.0, -0.7, 0.4, 1.1, 2.5] {
        let traj = history.integrate(&[x0], &TrajectoryOptions::default()).unwrap();
        let exact = g.free_trajectory(x0, 1.0, 1.0, 1.0);
        let rel = (traj.final_position()[0] - exact).abs() / exact.abs();
        assert!(rel < 1e-3, "x0 = {x0}: rel {rel:e}");
        assert!(!traj.truncated && !traj.node_encountered());
    }
}

#[test]
fn free_gaussian_newton_residual_converges_at_second_order() {
    let mut worst = Vec::new();
    for (dt, stride) in [(4e-3, 10), (2e-3, 10)] {
        let rec = free_gaussian_record(dt, stride, 1.0);
        let traj = integrate_trajectory(&rec, &[1.0], &free()).unwrap();
        let res = newton_residual(&traj, &rec, &free()).unwrap();
        worst.push(res[1..res.len() - 1].iter().cloned().fold(0.0, f64::max));
    }
    let ratio = worst[0] / worst[1];
    assert!(ratio > 3.0, "residuals {worst:?}, ratio {ratio}");
}

#[test]
fn coherent_state_moves_rigidly() {
    let osc = Oscillator::natural();
    let (a, p0) = (1.5, 0.0);
    let psi0 = osc.sample_coherent(a, p0, &line(), 0).unwrap();
    let period = 2.0 * std::f64::consts::PI;
    let steps = 2000;
    let cfg = EvolverConfig::new(period / steps as f64, Scheme::SplitStepFourier, 5).unwrap();
    let rec = evolve_tdse(&psi0, &oscillator(), &cfg, steps).unwrap();
    let history = VelocityHistory::from_record(&rec, &oscillator(), DEFAULT_NODE_REL).unwrap();
    let forces = force_history(&rec, &oscillator(), DEFAULT_NODE_REL).unwrap();
    for x0 in [0.5, 1.5, 2.5] {
        let traj = history.integrate(&[x0], &TrajectoryOptions::default()).unwrap();
        for (t, x) in traj.times.iter().zip(&traj.positions) {
            let exact = x0 + osc.classical_centre(a, p0, *t) - a;
            assert!((x[0] - exact).abs() < 1e-3, "t = {t}: {} vs {exact}", x[0]);
        }
        let res = newton_residual_with(&traj, &forces);
        assert!(res.iter().all(|r| *r < 1e-2), "{}", res.iter().cloned().fold(0.0, f64::max));
    }
}

#[test]
fn ensemble_quantum_force_vanishes() {
    let rec = free_gaussian_record(1e-3, 500, 1.0);
    for snap in &rec.snapshots {
        let rep = force_balance_report(snap, &free(), DEFAULT_NODE_REL * snap.max_abs(), 0.0).unwrap();
        assert!(rep.ensemble_quantum[0][0].abs() < 1e-6);
    }
}

#[test]
fn plane_wave_centre_of_mass_forces_cancel() {
    let l = 10.0;
    let grid = Arc::new(SpatialGrid::cube(2, 128, -l, l, Boundary::Periodic).unwrap());
    let sys = ParticleSystem::new(vec![1.0, 1.0], vec![1, 1], 1.0, Potential::free()).unwrap();
    let k = 2.0 * std::f64::consts::PI / (2.0 * l);
    let rel = |u: f64| (-1..=1).map(|n| (-(u + 2.0 * l * n as f64).powi(2) / 16.0).exp()).sum::<f64>();
    let psi = ComplexField::from_fn(grid, |x| Complex64::from_polar(rel(x[0] - x[1]), k * (x[0] + x[1])))
        .unwrap()
        .normalized()
        .unwrap();
    let rep = force_balance_report(&psi, &sys, DEFAULT_NODE_REL * psi.max_abs(), 0.0).unwrap();
    let c = rep.pair_cancellation.unwrap();
    assert!(c < 1e-6, "{c:e}");
    assert!(rep.quantum[0].max_magnitude() > 0.1);
    let v1 = bohm_velocity(&psi, &sys, 0).unwrap();
    let v2 = bohm_velocity(&psi, &sys, 1).unwrap();
    for i in 0..psi.len() {
        assert!((v1.components[0].values()[i] - k).abs() < 1e-8);
        assert!((v2.components[0].values()[i] - k).abs() < 1e-8);
    }
}

#[test]
fn stride_validator_rejects_coarse_records() {
    let rec = free_gaussian_record(1e-2, 50, 2.0);
    assert!(integrate_trajectory(&rec, &[1.0], &free()).is_err());
}

#[test]
fn leaving_the_grid_truncates() {
    let grid = Arc::new(SpatialGrid::cube(1, 256, -10.0, 10.0, Boundary::Periodic).unwrap());
    let psi0 = GaussianPacket::new(5.0, 1.5, 2.0).sample(&grid, 0).unwrap();
    let cfg = EvolverConfig::new(5e-3, Scheme::SplitStepFourier, 2).unwrap();
    let rec = evolve_tdse(&psi0, &free(), &cfg, 600).unwrap();
    let history = VelocityHistory::from_record(&rec, &free(), DEFAULT_NODE_REL).unwrap();
    let opts = TrajectoryOptions {
        check_stride: false,
        ..TrajectoryOptions::default()
    };
    let traj = history.integrate(&[6.0], &opts).unwrap();
    assert!(traj.truncated);
    assert!(traj.final_position()[0] < 10.0);
    let csv = traj.to_csv("abc");
    assert!(csv.lines().any(|l| l == "t,x0,p0,node"));
}

/// Bohmian chaos experiment: ψ = (φ₀₀ + φ₁₀ + φ₁₁)/√3 in a 2D oscillator with
/// ω_y/ω_x = √2. There is no reference value; the test asserts only that the
/// separation slope stays positive for every fit window.
#[test]
fn incommensurate_oscillator_shows_persistent_separation_growth() {
    let grid = Arc::new(SpatialGrid::cube(2, 64, -5.0, 5.0, Boundary::Periodic).unwrap());
    let ox = Oscillator::natural();
    let oy = Oscillator {
        mass: 1.0,
        omega: 2f64.sqrt(),
        hbar: 1.0,
    };
    let terms = [(0usize, 0usize), (1, 0), (1, 1)];
    let c = 1.0 / 3f64.sqrt();
    let interval = 0.05;
    let snaps: Vec<ComplexField> = (0..=1200)
        .map(|k| {
            let t = k as f64 * interval;
            ComplexField::from_fn(grid.clone(), |x| {
                terms
                    .iter()
                    .map(|&(a, b)| {
                        let e = ox.energy(a) + oy.energy(b);
                        Complex64::from_polar(c * ox.eigenfunction(a, x[0]) * oy.eigenfunction(b, x[1]), -e * t)
                    })
                    .sum()
            })
            .unwrap()
        })
        .collect();
    let rec = EvolutionRecord::from_snapshots(interval, 1, snaps);
    let sys = ParticleSystem::single(1.0, 2, 1.0, Potential::free()).unwrap();
    let history = VelocityHistory::from_record(&rec, &sys, DEFAULT_NODE_REL).unwrap();
    // the moving node makes max|v| unbounded, so the stride check is waived
    assert!(history.validate_stride().is_err());
    let opts = TrajectoryOptions {
        check_stride: false,
        dt: Some(0.01),
        ..TrajectoryOptions::default()
    };
    let sep = trajectory_separation_with(&history, &[0.0, -1.15], &[1e-4, -1.15], &opts, FitWindow::default()).unwrap();
    for (start, end) in [(0.1, 1.0), (0.3, 1.0), (0.5, 1.0), (0.1, 0.5)] {
        let s = sep.slope_over(FitWindow { start, end });
        assert!(s > 0.0, "window [{start}, {end}]: slope {s}");
    }
}

use std::f64::consts::PI;
use std::sync::Arc;

use bohmflow::dynamics::*;
use bohmflow::field::*;
use bohmflow::states::{GaussianPacket, Oscillator};
use bohmflow::Complex64;

fn line(points: usize, boundary: Boundary) -> Arc<SpatialGrid> {
    Arc::new(SpatialGrid::cube(1, points, -20.0, 20.0, boundary).unwrap())
}

fn free() -> ParticleSystem {
    ParticleSystem::single(1.0, 1, 1.0, Potential::free()).unwrap()
}

fn oscillator() -> ParticleSystem {
    ParticleSystem::single(1.0, 1, 1.0, Potential::harmonic(vec![1.0], vec![0.0])).unwrap()
}

fn width(psi: &ComplexField) -> f64 {
    let g = psi.grid();
    let w = quadrature_weights(g);
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (i, v) in psi.values().iter().enumerate() {
        let x = g.coordinate(0, i);
        let p = v.norm_sqr() * w[i];
        m0 += p;
        m1 += p * x;
        m2 += p * x * x;
    }
    (m2 / m0 - (m1 / m0).powi(2)).sqrt()
}

fn plane_wave(grid: &Arc<SpatialGrid>, modes: f64) -> ComplexField {
    let k = 2.0 * PI * modes / 40.0;
    ComplexField::from_fn(grid.clone(), |x| Complex64::from_polar(40f64.powf(-0.5), k * x[0])).unwrap()
}

#[test]
fn oscillator_ground_state_returns_after_one_period() {
    let grid = line(512, Boundary::Periodic);
    let psi0 = Oscillator::natural().sample_eigenfunction(0, &grid, 0).unwrap();
    let cfg = EvolverConfig::new(2.0 * PI / 1000.0, Scheme::SplitStepFourier, 1000).unwrap();
    let rec = evolve_tdse(&psi0, &oscillator(), &cfg, 1000).unwrap();
    let overlap = inner_product(&psi0, rec.final_state()).unwrap();
    assert!((overlap.norm() - 1.0).abs() < 1e-6, "{overlap}");
    assert_eq!(rec.snapshots.len(), 2);
}

#[test]
fn free_gaussian_spreads_by_the_analytic_law() {
    let g = GaussianPacket::new(0.0, 1.0, 0.0);
    let target = g.free_sigma(1.0, 1.0, 1.0);
    let grid = line(512, Boundary::Periodic);
    let cfg = EvolverConfig::new(1e-3, Scheme::SplitStepFourier, 1000).unwrap();
    let rec = evolve_tdse(&g.sample(&grid, 0).unwrap(), &free(), &cfg, 1000).unwrap();
    let rel = (width(rec.final_state()) - target).abs() / target;
    assert!(rel < 1e-4, "split-step relative width error {rel:e}");

    let grid = line(2049, Boundary::Dirichlet);
    let cfg = EvolverConfig::new(1e-3, Scheme::CrankNicolson, 1000).unwrap();
    let rec = evolve_tdse(&g.sample(&grid, 0).unwrap(), &free(), &cfg, 1000).unwrap();
    let rel = (width(rec.final_state()) - target).abs() / target;
    assert!(rel < 1e-4, "Crank-Nicolson relative width error {rel:e}");
}

#[test]
fn plane_wave_keeps_constant_modulus() {
    let grid = line(256, Boundary::Periodic);
    let psi0 = plane_wave(&grid, 3.0);
    let cfg = EvolverConfig::new(0.01, Scheme::SplitStepFourier, 10).unwrap();
    let rec = evolve_tdse(&psi0, &free(), &cfg, 200).unwrap();
    let a0 = psi0.values()[0].norm();
    for snap in &rec.snapshots {
        for v in snap.values() {
            assert!((v.norm() - a0).abs() < 1e-10);
        }
    }
}

#[test]
fn q_removed_plane_wave_matches_linear_flow() {
    let grid = line(256, Boundary::Periodic);
    let psi0 = plane_wave(&grid, 2.0);
    let steps = 500;
    let ssf = EvolverConfig::new(1e-3, Scheme::SplitStepFourier, steps).unwrap();
    let linear = evolve_tdse(&psi0, &free(), &ssf, steps).unwrap();
    for scheme in [Scheme::SplitStepFourier, Scheme::ExplicitRk4] {
        let cfg = EvolverConfig::new(1e-3, scheme, steps).unwrap();
        let rec = evolve_noq(&psi0, &free(), &cfg, steps, &NoQOptions::default()).unwrap();
        let d = divergence_measure(rec.final_state(), linear.final_state()).unwrap().sqrt();
        assert!(d < 1e-8, "{scheme}: {d:e}");
    }
}

#[test]
fn unitary_schemes_conserve_norm_and_energy() {
    let osc = Oscillator::natural();
    let grid = line(512, Boundary::Periodic);
    let psi0 = osc.sample_coherent(1.5, 0.5, &grid, 0).unwrap();
    let cfg = EvolverConfig::new(1e-3, Scheme::SplitStepFourier, 100).unwrap();
    let rec = evolve_tdse(&psi0, &oscillator(), &cfg, 1000).unwrap();
    assert!(rec.norm_drift() < 1e-10 * 1000.0);
    assert!(rec.energy_drift() / rec.steps[0].energy < 1e-6, "{}", rec.energy_drift());
    assert_eq!(rec.snapshots.len(), 11);

    let grid = line(1025, Boundary::Dirichlet);
    let psi0 = osc.sample_coherent(1.5, 0.5, &grid, 0).unwrap();
    let cfg = EvolverConfig::new(1e-3, Scheme::CrankNicolson, 100).unwrap();
    let rec = evolve_tdse(&psi0, &oscillator(), &cfg, 1000).unwrap();
    assert!(rec.norm_drift() < 1e-8 * 1000.0);
    assert!(rec.energy_drift() / rec.steps[0].energy < 1e-6, "{}", rec.energy_drift());
}

#[test]
fn crank_nicolson_in_two_dimensions() {
    let grid = Arc::new(SpatialGrid::cube(2, 48, -8.0, 8.0, Boundary::Dirichlet).unwrap());
    let sys = ParticleSystem::single(1.0, 2, 1.0, Potential::harmonic(vec![1.0, 1.0], vec![0.0, 0.0])).unwrap();
    let osc = Oscillator::natural();
    let psi0 = ComplexField::from_fn(grid, |x| osc.coherent(1.0, 0.0, x[0]) * osc.eigenfunction(0, x[1])).unwrap();
    let cfg = EvolverConfig::new(0.01, Scheme::CrankNicolson, 10).unwrap();
    let rec = evolve_tdse(&psi0, &sys, &cfg, 50).unwrap();
    assert!(rec.norm_drift() < 1e-8 * 50.0, "{}", rec.norm_drift());
}

#[test]
fn unitary_flow_preserves_divergence() {
    let grid = line(512, Boundary::Periodic);
    let mut a = GaussianPacket::new(-0.25, 1.0, 0.0);
    a.chirp = -0.2;
    let mut b = a;
    b.x0 = 0.25;
    let cfg = EvolverConfig::new(1e-3, Scheme::SplitStepFourier, 500).unwrap();
    let pair = evolve_pair(&a.sample(&grid, 0).unwrap(), &b.sample(&grid, 0).unwrap(), &free(), &cfg, 2000, Flow::Unitary)
        .unwrap();
    assert!(pair.divergence_change() < 1e-8);
    assert!(pair.divergence[0] > 0.05);
}

/// For a focusing chirped Gaussian the Q-removed flow is pressureless
/// transport with a closed form; a translated copy keeps the same shape, so
/// D(t) = 2 − 2·exp(−c²σ₀²δ²/2 − δ²/(8σ₀²(1 + ct)²)).
#[test]
fn q_removed_translate_pair_follows_closed_form() {
    let (sigma, c, delta) = (1.0, -0.2, 0.5);
    let grid = line(512, Boundary::Periodic);
    let mut a = GaussianPacket::new(-0.5 * delta, sigma, 0.0);
    a.chirp = c;
    let mut b = a;
    b.x0 += delta;
    let cfg = EvolverConfig::new(1e-3, Scheme::SplitStepFourier, 500).unwrap();
    let opts = NoQOptions::default();
    let pair =
        evolve_pair(&a.sample(&grid, 0).unwrap(), &b.sample(&grid, 0).unwrap(), &free(), &cfg, 2000, Flow::NoQ(opts))
            .unwrap();
    for (t, d) in pair.times().iter().zip(&pair.divergence).step_by(100) {
        let s = 1.0 + c * t;
        let exact = 2.0 - 2.0 * (-(c * sigma * delta).powi(2) / 2.0 - delta * delta / (8.0 * sigma * sigma * s * s)).exp();
        assert!((d - exact).abs() < 1e-6, "t = {t}: {d} vs {exact}");
    }
    assert!(pair.max_norm_drift() < 1e-6);
    assert!(pair.divergence_change() > 0.1);
    // the tails beyond ~8.6σ are node-masked and reported
    assert!(!pair.psi.warnings.is_empty());
}

#[test]
fn dropping_the_nonlinear_term_gives_the_linear_flow() {
    let grid = line(512, Boundary::Periodic);
    let psi0 = Oscillator::natural().sample_coherent(1.0, 0.3, &grid, 0).unwrap();
    let opts = NoQOptions {
        include_nonlinear: false,
        ..NoQOptions::default()
    };
    let steps = 1000;
    let ssf = EvolverConfig::new(1e-3, Scheme::SplitStepFourier, steps).unwrap();
    let linear = evolve_tdse(&psi0, &oscillator(), &ssf, steps).unwrap();
    let same = evolve_noq(&psi0, &oscillator(), &ssf, steps, &opts).unwrap();
    assert_eq!(same.final_state().values(), linear.final_state().values());
    let rk4 = EvolverConfig::new(1e-3, Scheme::ExplicitRk4, steps).unwrap();
    let rec = evolve_noq(&psi0, &oscillator(), &rk4, steps, &opts).unwrap();
    let d = divergence_measure(rec.final_state(), linear.final_state()).unwrap().sqrt();
    assert!(d < 1e-6, "{d:e}");
}

#[test]
fn scheme_restrictions() {
    let grid = line(64, Boundary::Periodic);
    let psi0 = plane_wave(&grid, 1.0);
    let rk4 = EvolverConfig::new(1e-4, Scheme::ExplicitRk4, 1).unwrap();
    assert!(evolve_tdse(&psi0, &free(), &rk4, 1).is_err());
    let cn = EvolverConfig::new(1e-4, Scheme::CrankNicolson, 1).unwrap();
    assert!(evolve_noq(&psi0, &free(), &cn, 1, &NoQOptions::default()).is_err());
    let too_big = EvolverConfig::new(0.1, Scheme::ExplicitRk4, 1).unwrap();
    assert!(evolve_noq(&psi0, &free(), &too_big, 1, &NoQOptions::default()).is_err());
}

#[test]
fn unnormalized_start_is_reported() {
    let grid = line(64, Boundary::Periodic);
    let psi0 = plane_wave(&grid, 1.0).scale(Complex64::new(2.0, 0.0));
    let cfg = EvolverConfig::new(1e-3, Scheme::SplitStepFourier, 1).unwrap();
    let rec = evolve_tdse(&psi0, &free(), &cfg, 3).unwrap();
    assert_eq!(rec.warnings.len(), 1);
    assert_eq!(rec.snapshots.len(), 4);
}

#[test]
fn divergence_measure_cases() {
    let grid = line(512, Boundary::Periodic);
    let osc = Oscillator::natural();
    let a = osc.sample_eigenfunction(0, &grid, 0).unwrap();
    let b = osc.sample_eigenfunction(1, &grid, 0).unwrap();
    assert_eq!(divergence_measure(&a, &a).unwrap(), 0.0);
    assert!((divergence_measure(&a, &b).unwrap() - 2.0).abs() < 1e-10);
    let neg = a.scale(Complex64::new(-1.0, 0.0));
    assert!((divergence_measure(&a, &neg).unwrap() - 4.0).abs() < 1e-10);
    let other = line(256, Boundary::Periodic);
    let c = osc.sample_eigenfunction(0, &other, 0).unwrap();
    assert!(divergence_measure(&a, &c).is_err());
}

/// ψ = coherent state (x₀, p₀), φ = ground state: the defect is
/// −(i/2)·x₀p₀·exp(−(x₀² + p₀²)/4)·exp(i p₀x₀/2) in natural units.
#[test]
fn hermiticity_defect_cases() {
    let osc = Oscillator::natural();
    let sys = oscillator();
    let (x0, p0) = (1.0, 1.0);
    let exact = Complex64::new(0.0, -0.5 * x0 * p0) * (-(x0 * x0 + p0 * p0) / 4.0f64).exp() * Complex64::from_polar(1.0, p0 * x0 / 2.0);
    let mut values = Vec::new();
    for n in [512, 1024] {
        let grid = line(n, Boundary::Periodic);
        let ground = osc.sample_eigenfunction(0, &grid, 0).unwrap();
        let coherent = osc.sample_coherent(x0, p0, &grid, 0).unwrap();
        assert_eq!(hermiticity_defect(&coherent, &coherent, &sys).unwrap(), Complex64::default());
        let d = hermiticity_defect(&coherent, &ground, &sys).unwrap();
        assert!((d - exact).norm() < 1e-6, "{d} vs {exact}");
        values.push(d);
    }
    assert!((values[0] - values[1]).norm() / values[1].norm() < 1e-3);

    let grid = line(256, Boundary::Periodic);
    let d = hermiticity_defect(&plane_wave(&grid, 1.0), &plane_wave(&grid, 3.0), &free()).unwrap();
    assert!(d.norm() < 1e-10);
}

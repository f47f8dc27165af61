use crate::error::Result;
use crate::field::{default_node_threshold, gradient_real, AxisGroup, ComplexField, ParticleSystem, RealField};

use super::potential::VectorField;

/// Guidance velocity v_a = ħ·Im(ψ*∂_aψ)/(m_a|ψ|²) over every configuration
/// axis; points with |ψ| < eps_node are masked and carry zero.
pub fn guidance_field(psi: &ComplexField, sys: &ParticleSystem, eps_node: f64) -> Result<VectorField> {
    sys.check_grid(psi.grid())?;
    velocity_on(psi, sys, eps_node, (0..psi.grid().total_dim()).collect())
}

/// Velocity field of one particle with the default node threshold.
pub fn bohm_velocity(psi: &ComplexField, sys: &ParticleSystem, particle: usize) -> Result<VectorField> {
    sys.check_grid(psi.grid())?;
    let axes: Vec<usize> = sys.axes(particle)?.collect();
    velocity_on(psi, sys, default_node_threshold(psi), axes)
}

fn velocity_on(psi: &ComplexField, sys: &ParticleSystem, eps_node: f64, axes: Vec<usize>) -> Result<VectorField> {
    let mask: Vec<bool> = psi.values().iter().map(|v| v.norm() < eps_node).collect();
    let mut components = Vec::with_capacity(axes.len());
    // Im(ψ*∂ψ) = Re ψ·∂Im ψ − Im ψ·∂Re ψ, so a real state gives exactly zero.
    let grid = psi.grid_arc().clone();
    let re = RealField::from_parts(grid.clone(), psi.values().iter().map(|v| v.re).collect());
    let im = RealField::from_parts(grid, psi.values().iter().map(|v| v.im).collect());
    for &a in &axes {
        let group = AxisGroup::Axes(a..a + 1);
        let d_re = gradient_real(&re, &group)?.remove(0);
        let d_im = gradient_real(&im, &group)?.remove(0);
        let scale = sys.hbar() / sys.axis_mass(a);
        let v = (0..psi.len())
            .map(|i| {
                if mask[i] {
                    return 0.0;
                }
                let p = psi.values()[i];
                let current = p.re * d_im.values()[i] - p.im * d_re.values()[i];
                scale * current / p.norm_sqr()
            })
            .collect();
        components.push(RealField::from_parts(psi.grid_arc().clone(), v));
    }
    Ok(VectorField { axes, components, mask })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::field::{polar_decompose, Boundary, Potential, SpatialGrid};
    use crate::states::{GaussianPacket, Oscillator};
    use crate::Complex64;

    fn setup() -> (Arc<SpatialGrid>, ParticleSystem) {
        let grid = Arc::new(SpatialGrid::cube(1, 512, -20.0, 20.0, Boundary::Periodic).unwrap());
        (grid, ParticleSystem::single(2.0, 1, 1.0, Potential::free()).unwrap())
    }

    #[test]
    fn real_state_is_motionless() {
        let (grid, sys) = setup();
        let psi = Oscillator::natural().sample_eigenfunction(0, &grid, 0).unwrap();
        let v = bohm_velocity(&psi, &sys, 0).unwrap();
        assert_eq!(v.max_magnitude(), 0.0);
    }

    #[test]
    fn plane_wave_moves_uniformly() {
        let (grid, sys) = setup();
        let k = 2.0 * std::f64::consts::PI * 5.0 / 40.0;
        let psi = ComplexField::from_fn(grid, |x| Complex64::from_polar(0.2, k * x[0])).unwrap();
        let v = bohm_velocity(&psi, &sys, 0).unwrap();
        for x in v.components[0].values() {
            assert!((x - k / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn matches_phase_gradient_where_smooth() {
        let (grid, sys) = setup();
        let mut g = GaussianPacket::new(0.3, 1.2, 0.4);
        g.chirp = 0.1;
        let psi = g.sample(&grid, 0).unwrap();
        let v = bohm_velocity(&psi, &sys, 0).unwrap();
        let polar = polar_decompose(&psi, 1.0, 1e-8).unwrap();
        let s = polar.phase_action.values();
        let h = grid.spacing(0);
        for i in 1..grid.len() - 1 {
            let (a, b) = (s[i + 1] - s[i], s[i] - s[i - 1]);
            let x = grid.coordinate(0, i);
            if a.abs() < 1.0 && b.abs() < 1.0 && x.abs() < 5.0 {
                // the centred difference of S is second order; compare the analytic phase slope instead
                let exact = (0.4 + 0.1 * (x - 0.3)) / 2.0;
                assert!((v.components[0].values()[i] - exact).abs() < 1e-8);
                assert!(((a + b) / (2.0 * h) / 2.0 - exact).abs() < 1e-2);
            }
        }
    }
}

use log::warn;

use crate::error::Result;
use crate::field::{
    laplacian_real, mask_fraction, masked_stencil_gradient, polar_decompose, quadrature_weights, AxisGroup, Boundary,
    ComplexField, ParticleSystem, RealField,
};
use crate::io::{fmt_f64, CsvBuilder};

/// Q = −Σ_i (ħ²/2m_i)∇_i²R/R on the unmasked points of one state.
#[derive(Clone, Debug)]
pub struct QuantumPotentialField {
    /// Zero at masked points.
    pub q: RealField,
    /// Node points (R < eps_node), plus the faces of a Dirichlet grid where
    /// the stencil Laplacian is not defined.
    pub node_mask: Vec<bool>,
    pub eps_node: f64,
}

impl QuantumPotentialField {
    pub fn mask_fraction(&self) -> f64 {
        mask_fraction(&self.node_mask)
    }

    pub fn value(&self, flat: usize) -> Option<f64> {
        (!self.node_mask[flat]).then(|| self.q.values()[flat])
    }
}

pub fn quantum_potential(psi: &ComplexField, sys: &ParticleSystem, eps_node: f64) -> Result<QuantumPotentialField> {
    sys.check_grid(psi.grid())?;
    let polar = polar_decompose(psi, sys.hbar(), eps_node)?;
    let grid = psi.grid_arc().clone();
    let mut mask = polar.node_mask;
    if grid.boundary() == Boundary::Dirichlet {
        let all: Vec<usize> = (0..grid.total_dim()).collect();
        for (i, m) in mask.iter_mut().enumerate() {
            *m |= grid.on_boundary(i, &all);
        }
    }
    let r = polar.amplitude;
    let mut q = vec![0.0; r.len()];
    for axis in 0..grid.total_dim() {
        let w = sys.hbar() * sys.hbar() / (2.0 * sys.axis_mass(axis));
        let lap = laplacian_real(&r, &AxisGroup::Axes(axis..axis + 1))?;
        for (i, (qi, l)) in q.iter_mut().zip(lap.values()).enumerate() {
            if !mask[i] {
                *qi -= w * l / r.values()[i];
            }
        }
    }
    if mask.iter().all(|&m| m) {
        warn!("quantum potential: every grid point is node-masked");
    }
    Ok(QuantumPotentialField {
        q: RealField::from_parts(grid, q),
        node_mask: mask,
        eps_node,
    })
}

/// A vector field over one particle's axes with its validity mask.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub axes: Vec<usize>,
    pub components: Vec<RealField>,
    pub mask: Vec<bool>,
}

impl VectorField {
    pub fn mask_fraction(&self) -> f64 {
        mask_fraction(&self.mask)
    }

    /// Largest Euclidean magnitude over unmasked points.
    pub fn max_magnitude(&self) -> f64 {
        (0..self.mask.len())
            .filter(|&i| !self.mask[i])
            .map(|i| self.components.iter().map(|c| c.values()[i].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// ∫ weight·F dτ per component over unmasked points.
    pub fn weighted_integral(&self, weight: &[f64]) -> Vec<f64> {
        let quad = quadrature_weights(self.components[0].grid());
        self.components
            .iter()
            .map(|c| {
                c.values()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !self.mask[*i])
                    .map(|(i, v)| v * weight[i] * quad[i])
                    .sum()
            })
            .collect()
    }
}

/// −∇_iQ by central differences that skip masked neighbours.
pub fn quantum_force(qpf: &QuantumPotentialField, sys: &ParticleSystem, particle: usize) -> Result<VectorField> {
    let axes: Vec<usize> = sys.axes(particle)?.collect();
    let (grad, mask) = masked_stencil_gradient(&qpf.q, &qpf.node_mask, &axes);
    Ok(VectorField {
        components: grad.into_iter().map(negate).collect(),
        axes,
        mask,
    })
}

/// −∇_iV at time `t`, by the same stencil (only Dirichlet faces masked).
pub fn classical_force(psi: &ComplexField, sys: &ParticleSystem, particle: usize, t: f64) -> Result<VectorField> {
    let axes: Vec<usize> = sys.axes(particle)?.collect();
    let v = sys.potential().sample(psi.grid_arc(), t)?;
    let none = vec![false; v.len()];
    let (grad, mask) = masked_stencil_gradient(&v, &none, &axes);
    Ok(VectorField {
        components: grad.into_iter().map(negate).collect(),
        axes,
        mask,
    })
}

fn negate(f: RealField) -> RealField {
    let grid = f.grid_arc().clone();
    RealField::from_parts(grid, f.into_values().into_iter().map(|v| -v).collect())
}

#[derive(Clone, Debug)]
pub struct ForceReport {
    pub quantum: Vec<VectorField>,
    pub classical: Vec<VectorField>,
    /// Σ_i(−∇_iQ) componentwise; present when every particle has the same
    /// number of dimensions.
    pub total_quantum: Option<VectorField>,
    /// ∫R²(−∇_iQ)dτ per particle over unmasked points.
    pub ensemble_quantum: Vec<Vec<f64>>,
    /// max over points unmasked for both particles of |F₁ + F₂| (n = 2 only).
    pub pair_cancellation: Option<f64>,
    /// max |−∇V − ∇Q| over the points where both are defined.
    pub max_total_force: f64,
    pub mask_fraction: f64,
}

impl ForceReport {
    pub fn summary_csv(&self, config_hash: &str) -> String {
        let mut csv = CsvBuilder::new("force-summary", config_hash, &["quantity", "particle", "component", "value"]);
        csv.row(&["max_total_force".into(), String::new(), String::new(), fmt_f64(self.max_total_force)]);
        csv.row(&["mask_fraction".into(), String::new(), String::new(), fmt_f64(self.mask_fraction)]);
        if let Some(p) = self.pair_cancellation {
            csv.row(&["pair_cancellation".into(), String::new(), String::new(), fmt_f64(p)]);
        }
        for (i, avg) in self.ensemble_quantum.iter().enumerate() {
            for (c, v) in avg.iter().enumerate() {
                csv.row(&["ensemble_quantum_force".into(), i.to_string(), c.to_string(), fmt_f64(*v)]);
            }
        }
        csv.finish()
    }
}

pub fn force_balance_report(psi: &ComplexField, sys: &ParticleSystem, eps_node: f64, t: f64) -> Result<ForceReport> {
    let qpf = quantum_potential(psi, sys, eps_node)?;
    let r2: Vec<f64> = psi.values().iter().map(|v| v.norm_sqr()).collect();
    let n = sys.particle_count();
    let mut quantum = Vec::with_capacity(n);
    let mut classical = Vec::with_capacity(n);
    for i in 0..n {
        quantum.push(quantum_force(&qpf, sys, i)?);
        classical.push(classical_force(psi, sys, i, t)?);
    }
    let ensemble_quantum = quantum.iter().map(|f| f.weighted_integral(&r2)).collect();
    let len = psi.len();
    let mut max_total: f64 = 0.0;
    for (q, c) in quantum.iter().zip(&classical) {
        for p in 0..len {
            if q.mask[p] || c.mask[p] {
                continue;
            }
            let m = q
                .components
                .iter()
                .zip(&c.components)
                .map(|(a, b)| (a.values()[p] + b.values()[p]).powi(2))
                .sum::<f64>()
                .sqrt();
            max_total = max_total.max(m);
        }
    }
    let same_dims = sys.dims().windows(2).all(|w| w[0] == w[1]);
    let total_quantum = same_dims.then(|| {
        let d = sys.dims()[0];
        let mut mask = vec![false; len];
        for f in &quantum {
            for (m, fm) in mask.iter_mut().zip(&f.mask) {
                *m |= *fm;
            }
        }
        let components = (0..d)
            .map(|c| {
                let mut sum = vec![0.0; len];
                for f in &quantum {
                    for (s, v) in sum.iter_mut().zip(f.components[c].values()) {
                        *s += v;
                    }
                }
                for (s, &m) in sum.iter_mut().zip(&mask) {
                    if m {
                        *s = 0.0;
                    }
                }
                RealField::from_parts(psi.grid_arc().clone(), sum)
            })
            .collect();
        VectorField {
            axes: (0..d).collect(),
            components,
            mask,
        }
    });
    let pair_cancellation = match (&total_quantum, n) {
        (Some(total), 2) => Some(total.max_magnitude()),
        _ => None,
    };
    Ok(ForceReport {
        quantum,
        classical,
        total_quantum,
        ensemble_quantum,
        pair_cancellation,
        max_total_force: max_total,
        mask_fraction: qpf.mask_fraction(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::field::{Potential, SpatialGrid};
    use crate::states::Oscillator;
    use crate::Complex64;

    fn ho() -> (Arc<SpatialGrid>, ParticleSystem) {
        let grid = Arc::new(SpatialGrid::cube(1, 512, -20.0, 20.0, Boundary::Periodic).unwrap());
        let sys = ParticleSystem::single(1.0, 1, 1.0, Potential::harmonic(vec![1.0], vec![0.0])).unwrap();
        (grid, sys)
    }

    #[test]
    fn plane_wave_has_no_quantum_potential() {
        let (grid, sys) = ho();
        let k = 2.0 * std::f64::consts::PI * 3.0 / 40.0;
        let psi = ComplexField::from_fn(grid, |x| Complex64::from_polar(0.1, k * x[0])).unwrap();
        let q = quantum_potential(&psi, &sys, 1e-9).unwrap();
        assert!(q.q.max_abs() < 1e-10);
        let f = quantum_force(&q, &sys, 0).unwrap();
        assert!(f.max_magnitude() < 1e-10);
    }

    #[test]
    fn oscillator_ground_state_values() {
        let (grid, sys) = ho();
        let psi = Oscillator::natural().sample_eigenfunction(0, &grid, 0).unwrap();
        let q = quantum_potential(&psi, &sys, 1e-8 * psi.max_abs()).unwrap();
        for i in 0..grid.len() {
            if let Some(v) = q.value(i) {
                let x = grid.coordinate(0, i);
                if x.abs() < 5.0 {
                    assert!((v - (0.5 - 0.5 * x * x)).abs() < 1e-8, "x = {x}: {v}");
                }
            }
        }
        assert!((q.value(256).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn oscillator_forces_balance() {
        let (grid, sys) = ho();
        let psi = Oscillator::natural().sample_eigenfunction(0, &grid, 0).unwrap();
        let rep = force_balance_report(&psi, &sys, 1e-8 * psi.max_abs(), 0.0).unwrap();
        assert!(rep.max_total_force < 1e-4, "{}", rep.max_total_force);
        assert!(rep.ensemble_quantum[0][0].abs() < 1e-6);
        assert!(rep.pair_cancellation.is_none());
    }

    #[test]
    fn global_phase_and_scale_leave_q_unchanged() {
        let (grid, sys) = ho();
        let psi = Oscillator::natural().sample_coherent(1.0, 0.5, &grid, 0).unwrap();
        let c = Complex64::new(-2.5, 0.7);
        let a = quantum_potential(&psi, &sys, 1e-12).unwrap();
        let b = quantum_potential(&psi.scale(c), &sys, 1e-12 * c.norm()).unwrap();
        for i in 0..grid.len() {
            if psi.values()[i].norm() < 1e-4 * psi.max_abs() {
                continue;
            }
            if let (Some(x), Some(y)) = (a.value(i), b.value(i)) {
                assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn all_node_field_is_fully_masked() {
        let (grid, sys) = ho();
        let psi = ComplexField::zeros(grid);
        let q = quantum_potential(&psi, &sys, 1e-12).unwrap();
        assert_eq!(q.mask_fraction(), 1.0);
    }
}

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::field::spectral::SpectralPlan;
use crate::field::{
    quadrature_weights, spectral_laplacian, stencil_laplacian, Boundary, ComplexField, ParticleSystem, SpatialGrid,
};

/// Linear Hamiltonian H = Σ_a −(ħ²/2m_a)∂_a² + V on one grid, with the
/// kinetic weights and derivative plans cached.
pub struct Hamiltonian {
    grid: Arc<SpatialGrid>,
    system: ParticleSystem,
    plan: Option<SpectralPlan>,
    axes: Vec<usize>,
    weights: Vec<f64>,
    potential: Vec<f64>,
    potential_time: f64,
    quadrature: Vec<f64>,
}

impl Hamiltonian {
    pub fn new(grid: Arc<SpatialGrid>, system: &ParticleSystem) -> Result<Self> {
        system.check_grid(&grid)?;
        let plan = match grid.boundary() {
            Boundary::Periodic => Some(SpectralPlan::new(&grid)),
            Boundary::Dirichlet => None,
        };
        let potential = system.potential().sample(&grid, 0.0)?.into_values();
        Ok(Self {
            axes: (0..grid.total_dim()).collect(),
            weights: system.kinetic_weights(),
            quadrature: quadrature_weights(&grid),
            grid,
            system: system.clone(),
            plan,
            potential,
            potential_time: 0.0,
        })
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn system(&self) -> &ParticleSystem {
        &self.system
    }

    pub fn plan(&self) -> Option<&SpectralPlan> {
        self.plan.as_ref()
    }

    pub fn kinetic_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn quadrature(&self) -> &[f64] {
        &self.quadrature
    }

    /// Re-samples V when the potential is time dependent.
    pub fn set_time(&mut self, t: f64) -> Result<()> {
        if self.system.potential().is_time_dependent() && t != self.potential_time {
            self.potential = self.system.potential().sample(&self.grid, t)?.into_values();
            self.potential_time = t;
        }
        Ok(())
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Σ_a w_a ∂_a² f for arbitrary per-axis weights.
    pub fn weighted_laplacian(&self, f: &[Complex64], weights: &[f64]) -> Vec<Complex64> {
        match &self.plan {
            Some(plan) => spectral_laplacian(plan, f, &self.axes, weights),
            None => {
                let mut out = vec![Complex64::default(); f.len()];
                for (&a, &w) in self.axes.iter().zip(weights) {
                    let l = stencil_laplacian(&self.grid, f, &[a]);
                    for (o, v) in out.iter_mut().zip(l) {
                        *o += v * w;
                    }
                }
                out
            }
        }
    }

    pub fn weighted_laplacian_real(&self, f: &[f64], weights: &[f64]) -> Vec<f64> {
        match &self.plan {
            Some(_) => {
                let c: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                self.weighted_laplacian(&c, weights).into_iter().map(|v| v.re).collect()
            }
            None => {
                let mut out = vec![0.0; f.len()];
                for (&a, &w) in self.axes.iter().zip(weights) {
                    let l = stencil_laplacian(&self.grid, f, &[a]);
                    for (o, v) in out.iter_mut().zip(l) {
                        *o += v * w;
                    }
                }
                out
            }
        }
    }

    /// H ψ.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let lap = self.weighted_laplacian(psi, &self.weights);
        lap.iter()
            .zip(psi)
            .zip(&self.potential)
            .map(|((l, p), v)| -l + p * v)
            .collect()
    }

    pub fn inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter()
            .zip(b)
            .zip(&self.quadrature)
            .map(|((x, y), w)| x.conj() * y * *w)
            .sum()
    }

    pub fn norm_sqr(&self, a: &[Complex64]) -> f64 {
        a.iter().zip(&self.quadrature).map(|(x, w)| x.norm_sqr() * w).sum()
    }

    /// ⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩.
    pub fn energy(&self, psi: &[Complex64]) -> f64 {
        let h = self.apply(psi);
        self.inner(psi, &h).re / self.norm_sqr(psi)
    }

    pub fn energy_of(&self, psi: &ComplexField) -> f64 {
        self.energy(psi.values())
    }

    /// Largest kinetic eigenvalue the grid resolves, Σ_a w_a·(π/h_a)² on
    /// periodic grids and Σ_a w_a·4/h_a² for the stencil.
    pub fn kinetic_bound(&self) -> f64 {
        self.axes
            .iter()
            .zip(&self.weights)
            .map(|(&a, w)| {
                let h = self.grid.spacing(a);
                match self.plan {
                    Some(_) => w * (std::f64::consts::PI / h).powi(2),
                    None => w * 4.0 / (h * h),
                }
            })
            .sum()
    }
}

/// Options for the Q-removed nonlinear term (ħ²/2m)|ψ|⁻¹∇²|ψ|.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoQOptions {
    /// When false the nonlinear term is dropped and the flow is the ordinary
    /// linear Schrödinger equation.
    pub include_nonlinear: bool,
    /// Magnitude bound on |ψ|⁻¹∂²|ψ| applied at node-masked points.
    pub clamp: f64,
    /// Node threshold relative to max|ψ| of the current state.
    pub eps_node_rel: f64,
    /// Mask coverage above which a diagnostic is raised.
    pub mask_warn_fraction: f64,
}

impl Default for NoQOptions {
    fn default() -> Self {
        Self {
            include_nonlinear: true,
            clamp: 1e6,
            eps_node_rel: crate::field::DEFAULT_NODE_REL,
            mask_warn_fraction: 0.01,
        }
    }
}

/// Pointwise Σ_a (ħ²/2m_a)·∂_a²R / R with R = |ψ|; returns the potential-like
/// field and the masked fraction.
pub fn noq_curvature(h: &Hamiltonian, psi: &[Complex64], opts: &NoQOptions) -> (Vec<f64>, f64) {
    let r: Vec<f64> = psi.iter().map(|v| v.norm()).collect();
    let r_max = r.iter().copied().fold(0.0, f64::max);
    let eps = opts.eps_node_rel * r_max;
    let mut out = vec![0.0; r.len()];
    let mut masked = 0usize;
    for (a, &w) in h.kinetic_weights().iter().enumerate() {
        let mut unit = vec![0.0; h.kinetic_weights().len()];
        unit[a] = 1.0;
        let lap = h.weighted_laplacian_real(&r, &unit);
        for i in 0..r.len() {
            let mut ratio = lap[i] / r[i];
            if r[i] < eps {
                if ratio.is_nan() {
                    ratio = 0.0;
                }
                ratio = ratio.clamp(-opts.clamp, opts.clamp);
            } else if !ratio.is_finite() {
                ratio = 0.0;
            }
            out[i] += w * ratio;
        }
    }
    for &ri in &r {
        if ri < eps {
            masked += 1;
        }
    }
    (out, masked as f64 / r.len().max(1) as f64)
}

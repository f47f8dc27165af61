use num_complex::Complex64;

use super::hamiltonian::{noq_curvature, Hamiltonian, NoQOptions};
use crate::error::Result;
use crate::field::{inner_product, ComplexField, ParticleSystem};

/// D = ∫|ψ − φ|² dτ.
pub fn divergence_measure(psi: &ComplexField, phi: &ComplexField) -> Result<f64> {
    let diff = psi.sub(phi)?;
    Ok(inner_product(&diff, &diff)?.re.max(0.0))
}

/// Σ_i (ħ²/2m_i) ∫ φ*ψ [|ψ|⁻¹∇_i²|ψ| − |φ|⁻¹∇_i²|φ|] dτ, the amount by which
/// the Q-removed Hamiltonian fails to be Hermitian between ψ and φ.
pub fn hermiticity_defect(psi: &ComplexField, phi: &ComplexField, system: &ParticleSystem) -> Result<Complex64> {
    hermiticity_defect_with(psi, phi, system, &NoQOptions::default())
}

pub fn hermiticity_defect_with(
    psi: &ComplexField,
    phi: &ComplexField,
    system: &ParticleSystem,
    opts: &NoQOptions,
) -> Result<Complex64> {
    psi.grid().check_same(phi.grid())?;
    let h = Hamiltonian::new(psi.grid_arc().clone(), system)?;
    let (n_psi, _) = noq_curvature(&h, psi.values(), opts);
    let (n_phi, _) = noq_curvature(&h, phi.values(), opts);
    Ok(psi
        .values()
        .iter()
        .zip(phi.values())
        .zip(n_psi.iter().zip(&n_phi))
        .zip(h.quadrature())
        .map(|(((p, f), (a, b)), w)| f.conj() * p * (a - b) * *w)
        .sum())
}

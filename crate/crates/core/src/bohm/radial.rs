//! Spherically symmetric one-body variants on a [`RadialGrid`], used for the
//! reduced-mass hydrogen problem.

use num_complex::Complex64;

use crate::field::RadialGrid;

/// Q(r) = −(ħ²/2μ)∇²R/R and its node mask.
pub fn radial_quantum_potential(
    grid: &RadialGrid,
    psi: &[Complex64],
    mass: f64,
    hbar: f64,
    eps_node: f64,
) -> (Vec<f64>, Vec<bool>) {
    let r: Vec<f64> = psi.iter().map(|v| v.norm()).collect();
    let lap = grid.laplacian(&r);
    let mask: Vec<bool> = r.iter().map(|&v| v < eps_node).collect();
    let w = hbar * hbar / (2.0 * mass);
    let q = (0..r.len()).map(|i| if mask[i] { 0.0 } else { -w * lap[i] / r[i] }).collect();
    (q, mask)
}

/// −dQ/dr by central differences; the ends and points next to a node are
/// masked.
pub fn radial_quantum_force(grid: &RadialGrid, q: &[f64], mask: &[bool]) -> (Vec<f64>, Vec<bool>) {
    let d = grid.derivative(q);
    let n = q.len();
    let out_mask: Vec<bool> = (0..n)
        .map(|i| !grid.derivative_valid(i) || mask[i] || mask[i - 1] || mask[i + 1])
        .collect();
    let f = (0..n).map(|i| if out_mask[i] { 0.0 } else { -d[i] }).collect();
    (f, out_mask)
}

/// Radial guidance velocity ħ·Im(ψ*∂_rψ)/(μ|ψ|²); zero at nodes and ends.
pub fn radial_velocity(grid: &RadialGrid, psi: &[Complex64], mass: f64, hbar: f64, eps_node: f64) -> Vec<f64> {
    let d = grid.derivative(psi);
    psi.iter()
        .zip(&d)
        .map(|(p, dp)| {
            if p.norm() < eps_node {
                0.0
            } else {
                hbar * (p.conj() * dp).im / (mass * p.norm_sqr())
            }
        })
        .collect()
}

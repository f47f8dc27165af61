use num_complex::Complex64;

use super::values::{ComplexField, RealField};
use crate::error::{Error, Result};

/// Relative node threshold: points with |ψ| below this fraction of max|ψ|
/// are treated as nodes.
pub const DEFAULT_NODE_REL: f64 = 1e-8;

pub fn default_node_threshold(psi: &ComplexField) -> f64 {
    DEFAULT_NODE_REL * psi.max_abs()
}

/// ψ = R·exp(iS/ħ) with S on the principal branch, S ∈ (-πħ, πħ].
#[derive(Clone, Debug)]
pub struct PolarForm {
    pub amplitude: RealField,
    pub phase_action: RealField,
    pub node_mask: Vec<bool>,
    pub hbar: f64,
}

impl PolarForm {
    pub fn masked_fraction(&self) -> f64 {
        mask_fraction(&self.node_mask)
    }

    pub fn reconstruct(&self) -> ComplexField {
        let values = self
            .amplitude
            .values()
            .iter()
            .zip(self.phase_action.values())
            .map(|(&r, &s)| Complex64::from_polar(r, s / self.hbar))
            .collect();
        ComplexField::from_parts(self.amplitude.grid_arc().clone(), values)
    }
}

pub(crate) fn mask_fraction(mask: &[bool]) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64
}

pub(crate) fn node_mask(amplitude: &[f64], eps_node: f64) -> Vec<bool> {
    amplitude.iter().map(|&r| r < eps_node).collect()
}

pub fn polar_decompose(psi: &ComplexField, hbar: f64, eps_node: f64) -> Result<PolarForm> {
    if !(eps_node > 0.0) {
        return Err(Error::InvalidArgument(format!("eps_node must be positive, got {eps_node}")));
    }
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    let grid = psi.grid_arc().clone();
    let r: Vec<f64> = psi.values().iter().map(|v| v.norm()).collect();
    let s: Vec<f64> = psi.values().iter().map(|v| hbar * v.arg()).collect();
    let mask = node_mask(&r, eps_node);
    Ok(PolarForm {
        amplitude: RealField::from_parts(grid.clone(), r),
        phase_action: RealField::from_parts(grid, s),
        node_mask: mask,
        hbar,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::field::grid::{Boundary, SpatialGrid};

    fn grid() -> Arc<SpatialGrid> {
        Arc::new(SpatialGrid::cube(1, 128, -8.0, 8.0, Boundary::Periodic).unwrap())
    }

    #[test]
    fn constant_field() {
        let psi = ComplexField::from_fn(grid(), |_| Complex64::new(1.0, 0.0)).unwrap();
        let p = polar_decompose(&psi, 1.0, 1e-8).unwrap();
        assert!(p.amplitude.values().iter().all(|&r| r == 1.0));
        assert!(p.phase_action.values().iter().all(|&s| s == 0.0));
        assert!(p.node_mask.iter().all(|m| !m));
    }

    #[test]
    fn plane_wave_phase_is_wrapped() {
        let hbar = 0.5;
        let k = 2.0 * PI * 3.0 / 16.0;
        let psi = ComplexField::from_fn(grid(), |x| Complex64::from_polar(1.0, k * x[0])).unwrap();
        let p = polar_decompose(&psi, hbar, 1e-8).unwrap();
        let g = psi.grid();
        for i in 0..psi.len() {
            let kx = k * g.coordinate(0, i);
            let wrapped = (kx + PI).rem_euclid(2.0 * PI) - PI;
            let s = p.phase_action.values()[i] / hbar;
            let d = (s - wrapped).abs();
            assert!(d < 1e-12 || (d - 2.0 * PI).abs() < 1e-12);
            assert!((p.amplitude.values()[i] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn node_mask_matches_threshold_scan() {
        // first excited oscillator state: zero crossing at x = 0 (a grid point)
        let psi = ComplexField::from_fn(grid(), |x| Complex64::new(x[0] * (-x[0] * x[0] / 2.0).exp(), 0.0)).unwrap();
        let eps = default_node_threshold(&psi);
        let p = polar_decompose(&psi, 1.0, eps).unwrap();
        let scan: Vec<bool> = psi.values().iter().map(|v| v.norm() < eps).collect();
        assert_eq!(p.node_mask, scan);
        assert!(p.node_mask[64], "x = 0 must be masked");
        assert!(p.masked_fraction() > 0.0);
    }

    #[test]
    fn reconstruction_is_faithful() {
        let psi = ComplexField::from_fn(grid(), |x| {
            Complex64::from_polar((-x[0] * x[0] / 4.0).exp(), 1.7 * x[0] + 0.3 * x[0] * x[0])
        })
        .unwrap();
        let p = polar_decompose(&psi, 1.3, default_node_threshold(&psi)).unwrap();
        let back = p.reconstruct();
        for i in 0..psi.len() {
            if !p.node_mask[i] {
                let a = psi.values()[i];
                assert!((back.values()[i] - a).norm() <= 1e-12 * a.norm());
            }
        }
    }

    #[test]
    fn rejects_nonpositive_threshold() {
        let psi = ComplexField::zeros(grid());
        assert!(polar_decompose(&psi, 1.0, 0.0).is_err());
    }
}

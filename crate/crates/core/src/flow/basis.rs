use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{inner_product, Boundary, ComplexField, SpatialGrid};
use crate::states::Oscillator;

/// Orthonormality tolerance for grid-backed bases.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

/// A truncated orthonormal set, either sampled on a grid or label-only for
/// problems given directly as matrices.
#[derive(Clone, Debug)]
pub struct BasisSet {
    labels: Vec<String>,
    fields: Option<Vec<ComplexField>>,
    residual: f64,
}

impl BasisSet {
    pub fn from_fields(labels: Vec<String>, fields: Vec<ComplexField>) -> Result<Self> {
        if fields.len() < 2 || labels.len() != fields.len() {
            return Err(Error::InvalidArgument(format!(
                "a basis needs at least 2 members with one label each, got {} fields and {} labels",
                fields.len(),
                labels.len()
            )));
        }
        for f in &fields[1..] {
            fields[0].grid().check_same(f.grid())?;
        }
        let mut residual: f64 = 0.0;
        for (j, a) in fields.iter().enumerate() {
            for (k, b) in fields.iter().enumerate().skip(j) {
                let target = if j == k { 1.0 } else { 0.0 };
                residual = residual.max((inner_product(a, b)? - target).norm());
            }
        }
        if residual > ORTHONORMAL_TOLERANCE {
            return Err(Error::NotOrthonormal {
                residual,
                tolerance: ORTHONORMAL_TOLERANCE,
            });
        }
        Ok(Self {
            labels,
            fields: Some(fields),
            residual,
        })
    }

    pub fn label_only(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("a basis needs at least 2 members, got {n}")));
        }
        Ok(Self {
            labels: (0..n).map(|j| format!("e{j}")).collect(),
            fields: None,
            residual: 0.0,
        })
    }

    /// Oscillator eigenfunctions ψ_0 … ψ_{n−1} along `axis`.
    pub fn oscillator(grid: &Arc<SpatialGrid>, osc: &Oscillator, n: usize, axis: usize) -> Result<Self> {
        let fields = (0..n)
            .map(|j| osc.sample_eigenfunction(j, grid, axis))
            .collect::<Result<Vec<_>>>()?;
        Self::from_fields((0..n).map(|j| format!("ho{j}")).collect(), fields)
    }

    /// Normalized plane waves exp(2πi·m·x/L)/√L on a periodic 1D grid.
    pub fn plane_waves(grid: &Arc<SpatialGrid>, modes: &[i64]) -> Result<Self> {
        if grid.boundary() != Boundary::Periodic || grid.total_dim() != 1 {
            return Err(Error::InvalidArgument("plane-wave bases need a periodic 1D grid".into()));
        }
        let ax = grid.axis(0);
        let length = ax.upper - ax.lower;
        let fields = modes
            .iter()
            .map(|&m| {
                let k = 2.0 * std::f64::consts::PI * m as f64 / length;
                ComplexField::from_fn(grid.clone(), |x| Complex64::from_polar(length.powf(-0.5), k * (x[0] - ax.lower)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_fields(modes.iter().map(|m| format!("k{m}")).collect(), fields)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn fields(&self) -> Option<&[ComplexField]> {
        self.fields.as_deref()
    }

    pub fn orthonormality_residual(&self) -> f64 {
        self.residual
    }

    fn require_fields(&self) -> Result<&[ComplexField]> {
        self.fields()
            .ok_or_else(|| Error::InvalidArgument("operation needs a grid-backed basis".into()))
    }

    /// ψ = Σ_j a_j φ_j.
    pub fn reconstruct(&self, a: &[Complex64]) -> Result<ComplexField> {
        let fields = self.require_fields()?;
        if a.len() != fields.len() {
            return Err(Error::InvalidArgument(format!("{} coefficients for a basis of {}", a.len(), fields.len())));
        }
        let mut values = vec![Complex64::default(); fields[0].len()];
        for (c, f) in a.iter().zip(fields) {
            for (v, x) in values.iter_mut().zip(f.values()) {
                *v += c * x;
            }
        }
        ComplexField::new(fields[0].grid_arc().clone(), values)
    }

    /// a_j = ⟨φ_j|ψ⟩.
    pub fn project(&self, psi: &ComplexField) -> Result<Vec<Complex64>> {
        self.require_fields()?.iter().map(|f| inner_product(f, psi)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oscillator_basis_is_orthonormal() {
        let grid = Arc::new(SpatialGrid::cube(1, 512, -20.0, 20.0, Boundary::Periodic).unwrap());
        let b = BasisSet::oscillator(&grid, &Oscillator::natural(), 8, 0).unwrap();
        assert!(b.orthonormality_residual() < 1e-10);
        let a: Vec<Complex64> = (0..8).map(|j| Complex64::new(j as f64, 1.0)).collect();
        let back = b.project(&b.reconstruct(&a).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&back) {
            assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn rejects_non_orthogonal_sets() {
        let grid = Arc::new(SpatialGrid::cube(1, 128, -10.0, 10.0, Boundary::Periodic).unwrap());
        let osc = Oscillator::natural();
        let f = osc.sample_eigenfunction(0, &grid, 0).unwrap();
        let g = osc.sample_coherent(0.5, 0.0, &grid, 0).unwrap();
        let err = BasisSet::from_fields(vec!["a".into(), "b".into()], vec![f, g]).unwrap_err();
        assert!(matches!(err, Error::NotOrthonormal { .. }));
        assert!(BasisSet::label_only(1).is_err());
    }
}

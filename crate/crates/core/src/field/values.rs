use std::sync::Arc;

use num_complex::Complex64;

use super::grid::SpatialGrid;
use crate::error::{Error, Result};

/// Complex samples of a wavefunction on a [`SpatialGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: Arc<SpatialGrid>,
    values: Vec<Complex64>,
}

/// Real samples on a [`SpatialGrid`] (amplitudes, potentials, force components).
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Arc<SpatialGrid>,
    values: Vec<f64>,
}

macro_rules! field_common {
    ($ty:ident, $elem:ty) => {
        impl $ty {
            pub fn new(grid: Arc<SpatialGrid>, values: Vec<$elem>) -> Result<Self> {
                if values.len() != grid.len() {
                    return Err(Error::GridMismatch(format!(
                        "{} values for a grid of {} points",
                        values.len(),
                        grid.len()
                    )));
                }
                if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "non-finite sample at flat index {i}"
                    )));
                }
                Ok(Self { grid, values })
            }

            /// Skips the finiteness scan; callers guarantee the invariant.
            pub(crate) fn from_parts(grid: Arc<SpatialGrid>, values: Vec<$elem>) -> Self {
                debug_assert_eq!(values.len(), grid.len());
                Self { grid, values }
            }

            pub fn zeros(grid: Arc<SpatialGrid>) -> Self {
                let n = grid.len();
                Self {
                    grid,
                    values: vec![<$elem>::default(); n],
                }
            }

            pub fn from_fn(grid: Arc<SpatialGrid>, mut f: impl FnMut(&[f64]) -> $elem) -> Result<Self> {
                let mut x = vec![0.0; grid.total_dim()];
                let mut idx = vec![0; grid.total_dim()];
                let mut values = Vec::with_capacity(grid.len());
                for flat in 0..grid.len() {
                    grid.multi_index_into(flat, &mut idx);
                    for (a, &i) in idx.iter().enumerate() {
                        x[a] = grid.coordinate(a, i);
                    }
                    values.push(f(&x));
                }
                Self::new(grid, values)
            }

            pub fn grid(&self) -> &SpatialGrid {
                &self.grid
            }

            pub fn grid_arc(&self) -> &Arc<SpatialGrid> {
                &self.grid
            }

            pub fn values(&self) -> &[$elem] {
                &self.values
            }

            pub fn into_values(self) -> Vec<$elem> {
                self.values
            }

            pub fn len(&self) -> usize {
                self.values.len()
            }

            pub fn is_empty(&self) -> bool {
                self.values.is_empty()
            }

            pub fn all_finite(&self) -> bool {
                self.values.iter().all(|v| v.is_finite())
            }

            pub fn check_grid(&self, other: &SpatialGrid) -> Result<()> {
                self.grid.check_same(other)
            }
        }
    };
}

field_common!(ComplexField, Complex64);
field_common!(RealField, f64);

impl ComplexField {
    pub fn abs(&self) -> RealField {
        RealField::from_parts(self.grid.clone(), self.values.iter().map(|v| v.norm()).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> ComplexField {
        ComplexField::from_parts(self.grid.clone(), self.values.iter().map(|v| v * c).collect())
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.check_grid(other.grid())?;
        Ok(ComplexField::from_parts(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    /// Rescales to unit norm. Fails on the zero field.
    pub fn normalized(&self) -> Result<ComplexField> {
        let n = super::norm(self);
        if !(n > 0.0) {
            return Err(Error::InvalidArgument("cannot normalize a zero field".into()));
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }
}

impl RealField {
    pub fn to_complex(&self) -> ComplexField {
        ComplexField::from_parts(
            self.grid.clone(),
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

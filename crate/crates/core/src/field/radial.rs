//! Uniform radial grid for spherically symmetric one-body problems in three
//! dimensions. Samples sit at r_i = (i + 1)·dr, so r = 0 is excluded and the
//! last sample is r_max.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    points: usize,
    r_max: f64,
}

impl RadialGrid {
    pub fn new(points: usize, r_max: f64) -> Result<Self> {
        if points < 3 {
            return Err(Error::InvalidArgument(format!("radial grid needs at least 3 points, got {points}")));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("r_max must be positive, got {r_max}")));
        }
        Ok(Self { points, r_max })
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.r_max / self.points as f64
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn radius(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.spacing()
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.radius(i)).collect()
    }

    /// ∇²f for a radial function, via (1/r)·d²(r f)/dr² with r·f pinned to
    /// zero at r = 0 and one spacing beyond r_max.
    pub fn laplacian<T>(&self, f: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let h = self.spacing();
        let u: Vec<T> = f.iter().enumerate().map(|(i, &v)| v * self.radius(i)).collect();
        let n = u.len();
        (0..n)
            .map(|i| {
                let lo = if i == 0 { T::default() } else { u[i - 1] };
                let hi = if i + 1 == n { T::default() } else { u[i + 1] };
                (hi - u[i] * 2.0 + lo) * (1.0 / (h * h * self.radius(i)))
            })
            .collect()
    }

    /// Central-difference d/dr. The two end samples have no centred stencil
    /// and are returned as zero; see [`RadialGrid::derivative_valid`].
    pub fn derivative<T>(&self, f: &[T]) -> Vec<T>
    where
        T: Copy + Default + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let h = self.spacing();
        let n = f.len();
        (0..n)
            .map(|i| {
                if i == 0 || i + 1 == n {
                    T::default()
                } else {
                    (f[i + 1] - f[i - 1]) * (0.5 / h)
                }
            })
            .collect()
    }

    pub fn derivative_valid(&self, i: usize) -> bool {
        i > 0 && i + 1 < self.points
    }

    /// ∫ f · 4πr² dr by the rectangle rule on the sample points.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let h = self.spacing();
        f.iter()
            .enumerate()
            .map(|(i, v)| v * 4.0 * std::f64::consts::PI * self.radius(i).powi(2) * h)
            .sum()
    }
}

//! FFT machinery for periodic grids: per-axis line transforms and
//! wavenumber tables.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::SpatialGrid;

/// Angular wavenumbers in FFT order for `n` points over period `length`.
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let dk = 2.0 * PI / length;
    (0..n)
        .map(|j| {
            let m = if j <= (n - 1) / 2 { j as isize } else { j as isize - n as isize };
            m as f64 * dk
        })
        .collect()
}

/// Cached forward/inverse transforms for each axis of one grid.
pub struct SpectralPlan {
    axes: Vec<AxisPlan>,
}

struct AxisPlan {
    n: usize,
    stride: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl SpectralPlan {
    pub fn new(grid: &SpatialGrid) -> Self {
        let mut planner = FftPlanner::new();
        let axes = (0..grid.total_dim())
            .map(|a| {
                let ax = grid.axis(a);
                AxisPlan {
                    n: ax.points,
                    stride: grid.stride(a),
                    forward: planner.plan_fft_forward(ax.points),
                    inverse: planner.plan_fft_inverse(ax.points),
                    k: wavenumbers(ax.points, ax.upper - ax.lower),
                }
            })
            .collect();
        Self { axes }
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.axes[axis].k
    }

    /// First-derivative multiplier `i k`, with the unpaired Nyquist mode zeroed.
    pub fn first_derivative_multiplier(&self, axis: usize) -> Vec<Complex64> {
        let plan = &self.axes[axis];
        plan.k
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                if plan.n.is_multiple_of(2) && j == plan.n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, k)
                }
            })
            .collect()
    }

    pub fn second_derivative_multiplier(&self, axis: usize) -> Vec<Complex64> {
        self.axes[axis]
            .k
            .iter()
            .map(|&k| Complex64::new(-k * k, 0.0))
            .collect()
    }

    /// Transforms every line along `axis`, multiplies its spectrum by
    /// `multiplier` and transforms back (normalized).
    pub fn apply_axis(&self, values: &mut [Complex64], axis: usize, multiplier: &[Complex64]) {
        let plan = &self.axes[axis];
        let n = plan.n;
        let s = plan.stride;
        let block = n * s;
        let scale = 1.0 / n as f64;
        let mut line = vec![Complex64::default(); n];
        let mut scratch = vec![
            Complex64::default();
            plan.forward
                .get_inplace_scratch_len()
                .max(plan.inverse.get_inplace_scratch_len())
        ];
        for outer in (0..values.len()).step_by(block) {
            for inner in 0..s {
                let start = outer + inner;
                for (k, l) in line.iter_mut().enumerate() {
                    *l = values[start + k * s];
                }
                plan.forward.process_with_scratch(&mut line, &mut scratch);
                for (l, m) in line.iter_mut().zip(multiplier) {
                    *l *= m * scale;
                }
                plan.inverse.process_with_scratch(&mut line, &mut scratch);
                for (k, l) in line.iter().enumerate() {
                    values[start + k * s] = *l;
                }
            }
        }
    }

    /// Forward transform along every axis (unnormalized).
    pub fn forward_all(&self, values: &mut [Complex64]) {
        for a in 0..self.axes.len() {
            self.transform_axis(values, a, true);
        }
    }

    /// Inverse transform along every axis, including the 1/len normalization.
    pub fn inverse_all(&self, values: &mut [Complex64]) {
        for a in 0..self.axes.len() {
            self.transform_axis(values, a, false);
        }
        let scale = 1.0 / values.len() as f64;
        for v in values.iter_mut() {
            *v *= scale;
        }
    }

    fn transform_axis(&self, values: &mut [Complex64], axis: usize, forward: bool) {
        let plan = &self.axes[axis];
        let fft = if forward { &plan.forward } else { &plan.inverse };
        let n = plan.n;
        let s = plan.stride;
        let mut line = vec![Complex64::default(); n];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for outer in (0..values.len()).step_by(n * s) {
            for inner in 0..s {
                let start = outer + inner;
                for (k, l) in line.iter_mut().enumerate() {
                    *l = values[start + k * s];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, l) in line.iter().enumerate() {
                    values[start + k * s] = *l;
                }
            }
        }
    }

    /// Sum over axes of k_a², in the flat layout of the grid (for kinetic
    /// propagators).
    pub fn k_squared_table(&self, grid: &SpatialGrid, axes: &[usize], weights: &[f64]) -> Vec<f64> {
        let mut idx = vec![0; grid.total_dim()];
        (0..grid.len())
            .map(|flat| {
                grid.multi_index_into(flat, &mut idx);
                axes.iter()
                    .zip(weights)
                    .map(|(&a, w)| {
                        let k = self.axes[a].k[idx[a]];
                        w * k * k
                    })
                    .sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_layout() {
        let k = wavenumbers(4, 2.0 * PI);
        assert_eq!(k, vec![0.0, 1.0, -2.0, -1.0]);
        let k = wavenumbers(5, 2.0 * PI);
        assert_eq!(k, vec![0.0, 1.0, 2.0, -2.0, -1.0]);
    }
}

use std::ops::Range;

use num_complex::Complex64;

use super::grid::{Boundary, SpatialGrid};
use super::spectral::SpectralPlan;
use super::values::{ComplexField, RealField};
use crate::error::{Error, Result};

/// Which axes a differential operator acts on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AxisGroup {
    All,
    /// Contiguous axes belonging to one particle.
    Axes(Range<usize>),
}

impl AxisGroup {
    pub fn resolve(&self, grid: &SpatialGrid) -> Result<Vec<usize>> {
        match self {
            AxisGroup::All => Ok((0..grid.total_dim()).collect()),
            AxisGroup::Axes(r) => {
                if r.is_empty() || r.end > grid.total_dim() {
                    Err(Error::AxisOutOfRange(format!(
                        "axes {:?} on a {}-dimensional grid",
                        r,
                        grid.total_dim()
                    )))
                } else {
                    Ok(r.clone().collect())
                }
            }
        }
    }
}

/// Discrete Laplacian over `group`: spectral on periodic grids, 2nd-order
/// central differences with boundary outputs pinned to zero on Dirichlet grids.
pub fn laplacian(f: &ComplexField, group: &AxisGroup) -> Result<ComplexField> {
    let axes = group.resolve(f.grid())?;
    let values = match f.grid().boundary() {
        Boundary::Periodic => {
            let plan = SpectralPlan::new(f.grid());
            spectral_laplacian(&plan, f.values(), &axes, &vec![1.0; axes.len()])
        }
        Boundary::Dirichlet => stencil_laplacian(f.grid(), f.values(), &axes),
    };
    Ok(ComplexField::from_parts(f.grid_arc().clone(), values))
}

pub fn laplacian_real(f: &RealField, group: &AxisGroup) -> Result<RealField> {
    let axes = group.resolve(f.grid())?;
    let values = match f.grid().boundary() {
        Boundary::Periodic => {
            let plan = SpectralPlan::new(f.grid());
            let c: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
            spectral_laplacian(&plan, &c, &axes, &vec![1.0; axes.len()])
                .into_iter()
                .map(|v| v.re)
                .collect()
        }
        Boundary::Dirichlet => stencil_laplacian(f.grid(), f.values(), &axes),
    };
    Ok(RealField::from_parts(f.grid_arc().clone(), values))
}

/// Per-axis gradient components over `group`, same discretization policy as
/// [`laplacian`].
pub fn gradient(f: &ComplexField, group: &AxisGroup) -> Result<Vec<ComplexField>> {
    let axes = group.resolve(f.grid())?;
    Ok(match f.grid().boundary() {
        Boundary::Periodic => {
            let plan = SpectralPlan::new(f.grid());
            axes.iter()
                .map(|&a| {
                    let mut v = f.values().to_vec();
                    plan.apply_axis(&mut v, a, &plan.first_derivative_multiplier(a));
                    ComplexField::from_parts(f.grid_arc().clone(), v)
                })
                .collect()
        }
        Boundary::Dirichlet => axes
            .iter()
            .map(|&a| ComplexField::from_parts(f.grid_arc().clone(), central_difference(f.grid(), f.values(), a)))
            .collect(),
    })
}

pub fn gradient_real(f: &RealField, group: &AxisGroup) -> Result<Vec<RealField>> {
    let c = f.to_complex();
    Ok(gradient(&c, group)?
        .into_iter()
        .map(|g| RealField::from_parts(g.grid_arc().clone(), g.values().iter().map(|v| v.re).collect()))
        .collect())
}

pub(crate) fn spectral_laplacian(
    plan: &SpectralPlan,
    values: &[Complex64],
    axes: &[usize],
    weights: &[f64],
) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); values.len()];
    for (&a, &w) in axes.iter().zip(weights) {
        let mut v = values.to_vec();
        plan.apply_axis(&mut v, a, &plan.second_derivative_multiplier(a));
        for (o, x) in out.iter_mut().zip(&v) {
            *o += x * w;
        }
    }
    out
}

pub(crate) fn stencil_laplacian<T>(grid: &SpatialGrid, values: &[T], axes: &[usize]) -> Vec<T>
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let mut out = vec![T::default(); values.len()];
    let mut idx = vec![0; grid.total_dim()];
    for flat in 0..values.len() {
        if grid.on_boundary(flat, axes) {
            continue;
        }
        grid.multi_index_into(flat, &mut idx);
        let mut acc = T::default();
        for &a in axes {
            let h = grid.spacing(a);
            let s = grid.stride(a);
            let (lo, hi) = neighbours(grid, &idx, flat, a, s);
            acc = acc + (values[hi] - values[flat] * 2.0 + values[lo]) * (1.0 / (h * h));
        }
        out[flat] = acc;
    }
    out
}

pub(crate) fn central_difference<T>(grid: &SpatialGrid, values: &[T], axis: usize) -> Vec<T>
where
    T: Copy + Default + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let mut out = vec![T::default(); values.len()];
    let mut idx = vec![0; grid.total_dim()];
    let h = grid.spacing(axis);
    let s = grid.stride(axis);
    for flat in 0..values.len() {
        if grid.on_boundary(flat, &[axis]) {
            continue;
        }
        grid.multi_index_into(flat, &mut idx);
        let (lo, hi) = neighbours(grid, &idx, flat, axis, s);
        out[flat] = (values[hi] - values[lo]) * (0.5 / h);
    }
    out
}

/// Flat indices of the lower and upper neighbours along `axis`, wrapping on
/// periodic grids. Callers exclude Dirichlet faces.
fn neighbours(grid: &SpatialGrid, idx: &[usize], flat: usize, axis: usize, stride: usize) -> (usize, usize) {
    let n = grid.axis(axis).points;
    let i = idx[axis];
    let lo = if i == 0 { flat + (n - 1) * stride } else { flat - stride };
    let hi = if i + 1 == n { flat - (n - 1) * stride } else { flat + stride };
    (lo, hi)
}

/// Central-difference gradient of a real field that skips masked samples:
/// an output point is masked when it or either neighbour is masked.
pub fn masked_stencil_gradient(
    f: &RealField,
    mask: &[bool],
    axes: &[usize],
) -> (Vec<RealField>, Vec<bool>) {
    let grid = f.grid();
    let mut out_mask = mask.to_vec();
    let mut idx = vec![0; grid.total_dim()];
    let mut comps: Vec<Vec<f64>> = vec![vec![0.0; f.len()]; axes.len()];
    for flat in 0..f.len() {
        if out_mask[flat] {
            continue;
        }
        if grid.on_boundary(flat, axes) {
            out_mask[flat] = true;
            continue;
        }
        grid.multi_index_into(flat, &mut idx);
        let mut ok = true;
        for &a in axes {
            let (lo, hi) = neighbours(grid, &idx, flat, a, grid.stride(a));
            if mask[lo] || mask[hi] {
                ok = false;
                break;
            }
        }
        if !ok {
            out_mask[flat] = true;
            continue;
        }
        for (c, &a) in axes.iter().enumerate() {
            let (lo, hi) = neighbours(grid, &idx, flat, a, grid.stride(a));
            comps[c][flat] = (f.values()[hi] - f.values()[lo]) * (0.5 / grid.spacing(a));
        }
    }
    for (flat, m) in out_mask.iter().enumerate() {
        if *m {
            for c in comps.iter_mut() {
                c[flat] = 0.0;
            }
        }
    }
    let fields = comps
        .into_iter()
        .map(|v| RealField::from_parts(f.grid_arc().clone(), v))
        .collect();
    (fields, out_mask)
}

/// Quadrature weights: rectangle rule on periodic grids, trapezoid on
/// Dirichlet grids, including the cell volume.
pub fn quadrature_weights(grid: &SpatialGrid) -> Vec<f64> {
    let vol = grid.cell_volume();
    match grid.boundary() {
        Boundary::Periodic => vec![vol; grid.len()],
        Boundary::Dirichlet => {
            let all: Vec<usize> = (0..grid.total_dim()).collect();
            let mut idx = vec![0; grid.total_dim()];
            (0..grid.len())
                .map(|flat| {
                    grid.multi_index_into(flat, &mut idx);
                    let mut w = vol;
                    for &a in &all {
                        if idx[a] == 0 || idx[a] + 1 == grid.axis(a).points {
                            w *= 0.5;
                        }
                    }
                    w
                })
                .collect()
        }
    }
}

/// ⟨f|g⟩ = ∫ conj(f)·g dτ.
pub fn inner_product(f: &ComplexField, g: &ComplexField) -> Result<Complex64> {
    f.check_grid(g.grid())?;
    let w = quadrature_weights(f.grid());
    Ok(f.values()
        .iter()
        .zip(g.values())
        .zip(&w)
        .map(|((a, b), w)| a.conj() * b * *w)
        .sum())
}

pub fn norm(f: &ComplexField) -> f64 {
    let w = quadrature_weights(f.grid());
    f.values()
        .iter()
        .zip(&w)
        .map(|(a, w)| a.norm_sqr() * w)
        .sum::<f64>()
        .sqrt()
}

/// ∫ f dτ for a real field.
pub fn integrate_real(f: &RealField) -> f64 {
    let w = quadrature_weights(f.grid());
    f.values().iter().zip(&w).map(|(a, w)| a * w).sum()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::field::grid::Axis;

    fn periodic_1d(n: usize, l: f64) -> Arc<SpatialGrid> {
        Arc::new(SpatialGrid::cube(1, n, 0.0, l, Boundary::Periodic).unwrap())
    }

    #[test]
    fn constant_is_annihilated() {
        for b in [Boundary::Periodic, Boundary::Dirichlet] {
            let g = Arc::new(SpatialGrid::cube(2, 16, -1.0, 1.0, b).unwrap());
            let f = ComplexField::from_fn(g, |_| Complex64::new(2.5, -1.0)).unwrap();
            let lap = laplacian(&f, &AxisGroup::All).unwrap();
            assert!(lap.max_abs() < 1e-12, "{b}: {}", lap.max_abs());
            for c in gradient(&f, &AxisGroup::All).unwrap() {
                assert!(c.max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn plane_wave_is_fourier_eigenfunction() {
        let l = 10.0;
        let g = periodic_1d(64, l);
        let k = 2.0 * PI * 5.0 / l;
        let f = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, k * x[0])).unwrap();
        let lap = laplacian(&f, &AxisGroup::All).unwrap();
        let grad = &gradient(&f, &AxisGroup::All).unwrap()[0];
        for i in 0..f.len() {
            let v = f.values()[i];
            assert!((lap.values()[i] + k * k * v).norm() <= 1e-10 * k * k);
            assert!((grad.values()[i] - Complex64::new(0.0, k) * v).norm() <= 1e-10 * k);
        }
    }

    #[test]
    fn linear_function_has_unit_slope_inside() {
        let g = Arc::new(SpatialGrid::cube(1, 11, -1.0, 1.0, Boundary::Dirichlet).unwrap());
        let f = RealField::from_fn(g, |x| x[0]).unwrap();
        let d = &gradient_real(&f, &AxisGroup::All).unwrap()[0];
        let n = d.len();
        for (i, v) in d.values().iter().enumerate() {
            if i == 0 || i + 1 == n {
                assert_eq!(*v, 0.0);
            } else {
                assert!((v - 1.0).abs() < 1e-12);
            }
        }
    }

    /// Refinement harness for the Dirichlet stencil on sin(πx/L).
    fn sine_error(points: usize) -> f64 {
        let l = 2.0;
        let g = Arc::new(SpatialGrid::cube(1, points, 0.0, l, Boundary::Dirichlet).unwrap());
        let f = RealField::from_fn(g.clone(), |x| (PI * x[0] / l).sin()).unwrap();
        let lap = laplacian_real(&f, &AxisGroup::All).unwrap();
        let target = -(PI / l).powi(2);
        (1..points - 1)
            .map(|i| (lap.values()[i] - target * f.values()[i]).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn dirichlet_laplacian_is_second_order() {
        let e1 = sine_error(33);
        let e2 = sine_error(65);
        let e3 = sine_error(129);
        let r1 = (e1 / e2).log2();
        let r2 = (e2 / e3).log2();
        assert!((r1 - 2.0).abs() < 0.1 && (r2 - 2.0).abs() < 0.1, "orders {r1} {r2}");
    }

    #[test]
    fn axis_group_selects_particle_axes() {
        let g = Arc::new(
            SpatialGrid::new(
                vec![
                    Axis { points: 32, lower: 0.0, upper: 2.0 * PI },
                    Axis { points: 32, lower: 0.0, upper: 2.0 * PI },
                ],
                Boundary::Periodic,
            )
            .unwrap(),
        );
        // f = cos(x0) * cos(2 x1)
        let f = ComplexField::from_fn(g, |x| Complex64::new(x[0].cos() * (2.0 * x[1]).cos(), 0.0)).unwrap();
        let l0 = laplacian(&f, &AxisGroup::Axes(0..1)).unwrap();
        let l1 = laplacian(&f, &AxisGroup::Axes(1..2)).unwrap();
        for i in 0..f.len() {
            assert!((l0.values()[i] + f.values()[i]).norm() < 1e-10);
            assert!((l1.values()[i] + 4.0 * f.values()[i]).norm() < 1e-10);
        }
        assert!(laplacian(&f, &AxisGroup::Axes(1..3)).is_err());
    }

    #[test]
    fn normalized_gaussian_has_unit_norm() {
        let g = Arc::new(SpatialGrid::cube(1, 512, -20.0, 20.0, Boundary::Dirichlet).unwrap());
        // |ψ|² = exp(-x²)/√π
        let f = ComplexField::from_fn(g, |x| Complex64::new((-x[0] * x[0] / 2.0).exp() / PI.powf(0.25), 0.0)).unwrap();
        let ip = inner_product(&f, &f).unwrap();
        assert!((ip.re - 1.0).abs() < 1e-8);
        let z = ComplexField::zeros(f.grid_arc().clone());
        assert_eq!(inner_product(&z, &z).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn oscillator_states_are_orthogonal() {
        let g = Arc::new(SpatialGrid::cube(1, 512, -20.0, 20.0, Boundary::Periodic).unwrap());
        let c = PI.powf(-0.25);
        let f0 = ComplexField::from_fn(g.clone(), |x| Complex64::new(c * (-x[0] * x[0] / 2.0).exp(), 0.0)).unwrap();
        let f2 = ComplexField::from_fn(g, |x| {
            Complex64::new(c / 2f64.sqrt() * (2.0 * x[0] * x[0] - 1.0) * (-x[0] * x[0] / 2.0).exp(), 0.0)
        })
        .unwrap();
        assert!(inner_product(&f0, &f2).unwrap().norm() < 1e-8);
        assert!((norm(&f2) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn inner_product_rejects_grid_mismatch() {
        let a = ComplexField::zeros(periodic_1d(8, 1.0));
        let b = ComplexField::zeros(periodic_1d(16, 1.0));
        assert!(matches!(inner_product(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn masked_gradient_masks_neighbours() {
        let g = periodic_1d(10, 10.0);
        let f = RealField::from_fn(g, |x| x[0] * x[0]).unwrap();
        let mut mask = vec![false; 10];
        mask[5] = true;
        let (d, m) = masked_stencil_gradient(&f, &mask, &[0]);
        assert!(m[4] && m[5] && m[6]);
        assert!(!m[3]);
        assert!((d[0].values()[3] - 6.0).abs() < 1e-12);
    }
}

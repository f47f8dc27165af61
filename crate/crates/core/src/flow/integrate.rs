use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::generator::Generator;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientState {
    pub t: f64,
    pub a: Vec<Complex64>,
}

impl CoefficientState {
    pub fn norm_sqr(&self) -> f64 {
        self.a.iter().map(|c| c.norm_sqr()).sum()
    }
}

fn axpy(a: &[Complex64], k: &[Complex64], h: f64) -> Vec<Complex64> {
    a.iter().zip(k).map(|(x, y)| x + y * h).collect()
}

/// One classical RK4 step of da/dt = M(a)·a.
pub fn rk4_step(gen: &Generator, a: &[Complex64], dt: f64) -> Result<Vec<Complex64>> {
    let k1 = gen.rhs(a)?;
    let k2 = gen.rhs(&axpy(a, &k1, 0.5 * dt))?;
    let k3 = gen.rhs(&axpy(a, &k2, 0.5 * dt))?;
    let k4 = gen.rhs(&axpy(a, &k3, dt))?;
    Ok((0..a.len())
        .map(|i| a[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0))
        .collect())
}

/// Integrates `steps` RK4 steps; returns the initial state plus every
/// `record_stride`-th state.
pub fn integrate_flow(
    gen: &Generator,
    a0: &[Complex64],
    dt: f64,
    steps: usize,
    record_stride: usize,
) -> Result<Vec<CoefficientState>> {
    if a0.len() != gen.dim {
        return Err(Error::InvalidArgument(format!("{} coefficients for a generator of dimension {}", a0.len(), gen.dim)));
    }
    if !(dt > 0.0 && dt.is_finite()) || record_stride == 0 {
        return Err(Error::InvalidArgument(format!("need dt > 0 and record_stride ≥ 1, got {dt}, {record_stride}")));
    }
    let mut a = a0.to_vec();
    let mut out = vec![CoefficientState { t: 0.0, a: a.clone() }];
    for step in 1..=steps {
        a = rk4_step(gen, &a, dt)?;
        if a.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite {
                step,
                what: "flow coefficients".into(),
            });
        }
        if step % record_stride == 0 || step == steps {
            out.push(CoefficientState {
                t: step as f64 * dt,
                a: a.clone(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::generator::CMatrix;

    #[test]
    fn two_level_rabi_oscillation() {
        // H = σ_x: |a_0|² = cos²t
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = Complex64::new(1.0, 0.0);
        h[(1, 0)] = Complex64::new(1.0, 0.0);
        let gen = Generator::from_hamiltonian(&h, 1.0).unwrap();
        let a0 = [Complex64::new(1.0, 0.0), Complex64::default()];
        let states = integrate_flow(&gen, &a0, 1e-3, 2000, 100).unwrap();
        for s in &states {
            assert!((s.a[0].norm_sqr() - s.t.cos().powi(2)).abs() < 1e-10);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }
}

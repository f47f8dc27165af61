use num_complex::Complex64;

use crate::error::{Error, Result};

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// BiCGSTAB for a matrix-free complex operator, starting from `x`.
pub fn bicgstab(
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    x: &mut [Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = Complex64::default());
        return Ok(0);
    }
    let ax = apply(x);
    let mut r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let r_hat = r.clone();
    let mut rho = Complex64::new(1.0, 0.0);
    let mut alpha = Complex64::new(1.0, 0.0);
    let mut omega = Complex64::new(1.0, 0.0);
    let mut v = vec![Complex64::default(); b.len()];
    let mut p = vec![Complex64::default(); b.len()];
    let mut res = norm(&r) / b_norm;
    if res <= tol {
        return Ok(0);
    }
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.norm() == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..p.len() {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        v = apply(&p);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<Complex64> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        if norm(&s) / b_norm <= tol {
            for i in 0..x.len() {
                x[i] += alpha * p[i];
            }
            return Ok(it);
        }
        let t = apply(&s);
        let tt = dot(&t, &t);
        omega = if tt.norm() > 0.0 { dot(&t, &s) / tt } else { Complex64::default() };
        for i in 0..x.len() {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm(&r) / b_norm;
        if res <= tol {
            return Ok(it);
        }
        if omega.norm() == 0.0 {
            break;
        }
    }
    Err(Error::SolverDivergence {
        iterations: max_iter,
        residual: res,
    })
}

/// Thomas algorithm for a tridiagonal system with constant off-diagonals.
pub fn solve_tridiagonal(lower: Complex64, diag: &[Complex64], upper: Complex64, rhs: &[Complex64]) -> Vec<Complex64> {
    let n = diag.len();
    let mut c = vec![Complex64::default(); n];
    let mut d = vec![Complex64::default(); n];
    c[0] = upper / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower * c[i - 1];
        c[i] = upper / m;
        d[i] = (rhs[i] - lower * d[i - 1]) / m;
    }
    let mut x = vec![Complex64::default(); n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_dense_product() {
        let n = 6;
        let lo = Complex64::new(-1.0, 0.2);
        let up = Complex64::new(-1.0, -0.3);
        let diag: Vec<Complex64> = (0..n).map(|i| Complex64::new(4.0 + i as f64, 1.0)).collect();
        let x_true: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let rhs: Vec<Complex64> = (0..n)
            .map(|i| {
                let mut v = diag[i] * x_true[i];
                if i > 0 {
                    v += lo * x_true[i - 1];
                }
                if i + 1 < n {
                    v += up * x_true[i + 1];
                }
                v
            })
            .collect();
        let x = solve_tridiagonal(lo, &diag, up, &rhs);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn bicgstab_solves_shifted_laplacian() {
        let n = 40;
        let shift = Complex64::new(1.0, 0.7);
        let apply = |x: &[Complex64]| -> Vec<Complex64> {
            (0..n)
                .map(|i| {
                    let l = if i > 0 { x[i - 1] } else { Complex64::default() };
                    let r = if i + 1 < n { x[i + 1] } else { Complex64::default() };
                    shift * x[i] * 3.0 - l - r
                })
                .collect()
        };
        let x_true: Vec<Complex64> = (0..n).map(|i| Complex64::new((i as f64).sin(), 0.5)).collect();
        let b = apply(&x_true);
        let mut x = vec![Complex64::default(); n];
        bicgstab(apply, &b, &mut x, 1e-13, 200).unwrap();
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}

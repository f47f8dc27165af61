use crate::io::fmt_f64;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::generator::Generator;
use crate::error::{Error, Result};

/// An autonomous real flow dx/dt = f(x) with an optional analytic Jacobian.
pub trait RealFlow {
    fn dim(&self) -> usize;
    fn rhs(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// J(x)·v when available in closed form.
    fn analytic_jvp(&self, _x: &[f64], _v: &[f64]) -> Option<Result<Vec<f64>>> {
        None
    }

    /// J(x)·v, falling back to a central difference with step
    /// h = 1e-6·(1 + |x|) along v/|v|.
    fn jvp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        if let Some(j) = self.analytic_jvp(x, v) {
            return j;
        }
        let nv = norm(v);
        if nv == 0.0 {
            return Ok(vec![0.0; v.len()]);
        }
        let h = 1e-6 * (1.0 + norm(x));
        let plus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b / nv).collect();
        let minus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b / nv).collect();
        let fp = self.rhs(&plus)?;
        let fm = self.rhs(&minus)?;
        Ok(fp.iter().zip(&fm).map(|(p, m)| (p - m) / (2.0 * h) * nv).collect())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn to_real(a: &[Complex64]) -> Vec<f64> {
    a.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

/// A coefficient generator seen as a flow on R^{2N} (re/im interleaved).
pub struct GeneratorFlow<'a> {
    pub generator: &'a Generator,
}

impl RealFlow for GeneratorFlow<'_> {
    fn dim(&self) -> usize {
        2 * self.generator.dim
    }

    fn rhs(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(to_real(&self.generator.rhs(&to_complex(x))?))
    }

    fn analytic_jvp(&self, x: &[f64], v: &[f64]) -> Option<Result<Vec<f64>>> {
        self.generator
            .tangent(&to_complex(x), &to_complex(v))
            .map(|r| r.map(|t| to_real(&t)))
    }
}

/// dx_i/dt = λ_i·x_i.
#[derive(Clone, Debug)]
pub struct DiagonalFlow {
    pub rates: Vec<f64>,
}

impl RealFlow for DiagonalFlow {
    fn dim(&self) -> usize {
        self.rates.len()
    }

    fn rhs(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.iter().zip(&self.rates).map(|(x, l)| x * l).collect())
    }

    fn analytic_jvp(&self, _x: &[f64], v: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(self.rhs(v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovOptions {
    pub dt: f64,
    pub steps: usize,
    pub renorm_stride: usize,
    /// Leading fraction of the steps excluded from the averages.
    pub transient_fraction: f64,
    /// Upper bound on stored convergence samples per exponent.
    pub history_points: usize,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            steps: 100_000,
            renorm_stride: 10,
            transient_fraction: 0.1,
            history_points: 200,
        }
    }
}

impl LyapunovOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("lyapunov dt must be positive, got {}", self.dt)));
        }
        if self.renorm_stride == 0 || self.steps == 0 {
            return Err(Error::InvalidArgument("lyapunov steps and renorm_stride must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.transient_fraction) {
            return Err(Error::InvalidArgument(format!(
                "transient_fraction must lie in [0, 1), got {}",
                self.transient_fraction
            )));
        }
        let transient = (self.steps as f64 * self.transient_fraction).floor() as usize;
        if self.steps - transient < self.renorm_stride {
            return Err(Error::InvalidArgument("no renormalization falls after the transient".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovResult {
    /// Descending.
    pub spectrum: Vec<f64>,
    /// Running estimates, indexed like `spectrum`.
    pub history: Vec<Vec<f64>>,
    pub history_times: Vec<f64>,
    pub transient_steps: usize,
    pub averaging_time: f64,
    pub options: LyapunovOptions,
    pub final_state: Vec<f64>,
}

impl LyapunovResult {
    pub fn largest(&self) -> f64 {
        self.spectrum[0]
    }

    pub fn sum(&self) -> f64 {
        self.spectrum.iter().sum()
    }

    /// Long format: one row per exponent and convergence sample.
    /// Running estimate of every exponent, one row per exponent and history
    /// point; `final` repeats the end value.
    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut csv = crate::io::CsvBuilder::new("lyapunov", config_hash, &["index", "final", "t", "running"]);
        for (i, (lam, hist)) in self.spectrum.iter().zip(&self.history).enumerate() {
            for (t, v) in self.history_times.iter().zip(hist) {
                csv.row(&[i.to_string(), fmt_f64(*lam), fmt_f64(*t), fmt_f64(*v)]);
            }
        }
        csv.finish()
    }
}

/// Classical Gram-Schmidt with one re-orthogonalization pass. Returns the
/// norms of the orthogonalized vectors before normalization.
fn gram_schmidt(vs: &mut [Vec<f64>], step: usize) -> Result<Vec<f64>> {
    let mut norms = Vec::with_capacity(vs.len());
    for i in 0..vs.len() {
        for _pass in 0..2 {
            let coeffs: Vec<f64> = (0..i).map(|j| dot(&vs[j], &vs[i])).collect();
            for (j, c) in coeffs.iter().enumerate() {
                let (head, tail) = vs.split_at_mut(i);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= c * y;
                }
            }
        }
        let n = norm(&vs[i]);
        if !n.is_finite() || !(1e-280..=1e280).contains(&n) {
            return Err(Error::TangentCollapse { step, norm: n });
        }
        for x in vs[i].iter_mut() {
            *x /= n;
        }
        norms.push(n);
    }
    Ok(norms)
}

/// Benettin-style spectrum: state and tangent frame advanced together by
/// RK4, frame re-orthonormalized every `renorm_stride` steps, logs of the
/// stretch factors averaged after the transient. The initial frame is the
/// identity.
pub fn lyapunov_spectrum(flow: &dyn RealFlow, x0: &[f64], opts: &LyapunovOptions) -> Result<LyapunovResult> {
    opts.validate()?;
    let n = flow.dim();
    if x0.len() != n {
        return Err(Error::InvalidArgument(format!("initial state has {} components, flow has {n}", x0.len())));
    }
    let dt = opts.dt;
    let transient = (opts.steps as f64 * opts.transient_fraction).floor() as usize;
    let renorms_after = (transient + 1..=opts.steps).filter(|s| s % opts.renorm_stride == 0).count();
    let keep_every = renorms_after.div_ceil(opts.history_points.max(1)).max(1);

    let mut x = x0.to_vec();
    let mut frame: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut sums = vec![0.0; n];
    let mut start_time = None;
    let mut history = vec![Vec::new(); n];
    let mut history_times = Vec::new();
    let mut renorm_count = 0usize;
    let shift = |a: &[f64], k: &[f64], h: f64| -> Vec<f64> { a.iter().zip(k).map(|(p, q)| p + h * q).collect() };

    for step in 1..=opts.steps {
        let k1 = flow.rhs(&x)?;
        let x2 = shift(&x, &k1, 0.5 * dt);
        let k2 = flow.rhs(&x2)?;
        let x3 = shift(&x, &k2, 0.5 * dt);
        let k3 = flow.rhs(&x3)?;
        let x4 = shift(&x, &k3, dt);
        let k4 = flow.rhs(&x4)?;
        for v in frame.iter_mut() {
            let l1 = flow.jvp(&x, v)?;
            let l2 = flow.jvp(&x2, &shift(v, &l1, 0.5 * dt))?;
            let l3 = flow.jvp(&x3, &shift(v, &l2, 0.5 * dt))?;
            let l4 = flow.jvp(&x4, &shift(v, &l3, dt))?;
            for i in 0..n {
                v[i] += dt / 6.0 * (l1[i] + 2.0 * (l2[i] + l3[i]) + l4[i]);
            }
        }
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step,
                what: "flow state".into(),
            });
        }
        if step == transient {
            start_time = Some(step as f64 * dt);
        }
        if step % opts.renorm_stride == 0 {
            let norms = gram_schmidt(&mut frame, step)?;
            if step > transient {
                let t0 = *start_time.get_or_insert(transient as f64 * dt);
                for (s, nv) in sums.iter_mut().zip(&norms) {
                    *s += nv.ln();
                }
                renorm_count += 1;
                if renorm_count.is_multiple_of(keep_every) || step + opts.renorm_stride > opts.steps {
                    let elapsed = step as f64 * dt - t0;
                    history_times.push(step as f64 * dt);
                    for (h, s) in history.iter_mut().zip(&sums) {
                        h.push(s / elapsed);
                    }
                }
            }
        }
    }
    // time covered by the accumulated stretch factors
    let last_renorm = opts.steps - opts.steps % opts.renorm_stride;
    let t0 = start_time.unwrap_or(transient as f64 * dt);
    let averaging_time = last_renorm as f64 * dt - t0;
    let raw: Vec<f64> = sums.iter().map(|s| s / averaging_time).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));
    Ok(LyapunovResult {
        spectrum: order.iter().map(|&i| raw[i]).collect(),
        history: order.iter().map(|&i| history[i].clone()).collect(),
        history_times,
        transient_steps: transient,
        averaging_time,
        options: *opts,
        final_state: x,
    })
}

/// Spectrum of a coefficient generator started from `a0`.
pub fn generator_spectrum(gen: &Generator, a0: &[Complex64], opts: &LyapunovOptions) -> Result<LyapunovResult> {
    if a0.len() != gen.dim {
        return Err(Error::InvalidArgument(format!("{} coefficients for a generator of dimension {}", a0.len(), gen.dim)));
    }
    lyapunov_spectrum(&GeneratorFlow { generator: gen }, &to_real(a0), opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_flow_recovers_rates() {
        let flow = DiagonalFlow {
            rates: vec![-1.0, 0.5, -0.2, 0.1],
        };
        for stride in [1, 5, 10] {
            let opts = LyapunovOptions {
                dt: 0.01,
                steps: 2000,
                renorm_stride: stride,
                ..LyapunovOptions::default()
            };
            let res = lyapunov_spectrum(&flow, &[1.0, 1.0, 1.0, 1.0], &opts).unwrap();
            for (got, want) in res.spectrum.iter().zip([0.5, 0.1, -0.2, -1.0]) {
                assert!((got - want).abs() < 1e-4, "stride {stride}: {got} vs {want}");
            }
            assert!((res.sum() + 0.6).abs() < 1e-4);
            assert!(!res.history_times.is_empty());
        }
    }

    #[test]
    fn finite_difference_jvp_matches_analytic() {
        struct Plain(DiagonalFlow);
        impl RealFlow for Plain {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn rhs(&self, x: &[f64]) -> Result<Vec<f64>> {
                Ok(x.iter().zip(&self.0.rates).map(|(x, l)| l * x + 0.1 * x * x * x).collect())
            }
        }
        let f = Plain(DiagonalFlow { rates: vec![1.0, -2.0] });
        let x = [0.3, -0.7];
        let v = [2.0, 1.0];
        let j = f.jvp(&x, &v).unwrap();
        let exact = [(1.0 + 0.3 * 0.09) * 2.0, (-2.0 + 0.3 * 0.49) * 1.0];
        for (a, b) in j.iter().zip(exact) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn collapse_is_reported() {
        let flow = DiagonalFlow { rates: vec![-100.0, 0.0] };
        let opts = LyapunovOptions {
            dt: 1e-3,
            steps: 10_000,
            renorm_stride: 10_000,
            transient_fraction: 0.0,
            history_points: 10,
        };
        let err = lyapunov_spectrum(&flow, &[1.0, 1.0], &opts).unwrap_err();
        assert!(matches!(err, Error::TangentCollapse { .. }));
    }

    #[test]
    fn options_are_validated() {
        let bad = LyapunovOptions {
            transient_fraction: 1.0,
            ..LyapunovOptions::default()
        };
        assert!(bad.validate().is_err());
        assert!(LyapunovOptions::default().validate().is_ok());
    }
}

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::{BasisSet, ORTHONORMAL_TOLERANCE};
use crate::dynamics::{noq_curvature, Hamiltonian, NoQOptions};
use crate::error::{Error, Result};
use crate::field::{ComplexField, ParticleSystem};

pub type CMatrix = DMatrix<Complex64>;

/// a ↦ H(a), a Hermitian matrix for each fixed coefficient vector.
pub type HamiltonianFn = dyn Fn(&[Complex64]) -> Result<CMatrix> + Send + Sync;

/// (a, δa) ↦ d/dε [H(a + εδa)(a + εδa)] at ε = 0.
pub type TangentFn = dyn Fn(&[Complex64], &[Complex64]) -> Result<Vec<Complex64>> + Send + Sync;

#[derive(Clone)]
pub enum GeneratorKind {
    /// Fixed M.
    Constant(CMatrix),
    /// M(a) = (iħ)⁻¹H(a); `macroscopic` names the state functions H depends on.
    StateDependent {
        hamiltonian: Arc<HamiltonianFn>,
        macroscopic: Vec<String>,
        /// Exact directional derivative of H(a)·a, when known.
        tangent: Option<Arc<TangentFn>>,
    },
}

/// Right-hand side of da/dt = M(a)·a.
#[derive(Clone)]
pub struct Generator {
    pub kind: GeneratorKind,
    pub hbar: f64,
    pub dim: usize,
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            GeneratorKind::Constant(_) => "constant".to_string(),
            GeneratorKind::StateDependent { macroscopic, .. } => format!("state-dependent {macroscopic:?}"),
        };
        f.debug_struct("Generator")
            .field("kind", &kind)
            .field("dim", &self.dim)
            .field("hbar", &self.hbar)
            .finish()
    }
}

fn inv_i_hbar(hbar: f64) -> Complex64 {
    Complex64::new(0.0, -1.0 / hbar)
}

impl Generator {
    pub fn constant(m: CMatrix, hbar: f64) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() < 2 {
            return Err(Error::InvalidArgument(format!("generator must be square with N ≥ 2, got {}×{}", m.nrows(), m.ncols())));
        }
        Ok(Self {
            dim: m.nrows(),
            kind: GeneratorKind::Constant(m),
            hbar,
        })
    }

    /// M = (iħ)⁻¹H for a fixed Hermitian H.
    pub fn from_hamiltonian(h: &CMatrix, hbar: f64) -> Result<Self> {
        Self::constant(h.map(|v| v * inv_i_hbar(hbar)), hbar)
    }

    pub fn state_dependent(
        dim: usize,
        hbar: f64,
        macroscopic: Vec<String>,
        hamiltonian: impl Fn(&[Complex64]) -> Result<CMatrix> + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: GeneratorKind::StateDependent {
                hamiltonian: Arc::new(hamiltonian),
                macroscopic,
                tangent: None,
            },
            hbar,
            dim,
        }
    }

    /// Attaches an exact tangent map; ignored for constant generators.
    pub fn with_tangent(
        mut self,
        f: impl Fn(&[Complex64], &[Complex64]) -> Result<Vec<Complex64>> + Send + Sync + 'static,
    ) -> Self {
        if let GeneratorKind::StateDependent { tangent, .. } = &mut self.kind {
            *tangent = Some(Arc::new(f));
        }
        self
    }

    /// d(M(a)·a)[δa], `None` when only finite differences are available.
    pub fn tangent(&self, a: &[Complex64], da: &[Complex64]) -> Option<Result<Vec<Complex64>>> {
        match &self.kind {
            GeneratorKind::Constant(m) => Some(Ok(mat_vec(m, da))),
            GeneratorKind::StateDependent { tangent, .. } => tangent.as_ref().map(|t| {
                let k = inv_i_hbar(self.hbar);
                Ok(t(a, da)?.into_iter().map(|v| v * k).collect())
            }),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, GeneratorKind::Constant(_))
    }

    pub fn matrix(&self, a: &[Complex64]) -> Result<CMatrix> {
        match &self.kind {
            GeneratorKind::Constant(m) => Ok(m.clone()),
            GeneratorKind::StateDependent { hamiltonian, .. } => {
                Ok(hamiltonian(a)?.map(|v| v * inv_i_hbar(self.hbar)))
            }
        }
    }

    /// M(a)·a.
    pub fn rhs(&self, a: &[Complex64]) -> Result<Vec<Complex64>> {
        let m = self.matrix(a)?;
        Ok(mat_vec(&m, a))
    }

    /// With M frozen at M(a).
    pub fn frozen_at(&self, a: &[Complex64]) -> Result<Self> {
        Self::constant(self.matrix(a)?, self.hbar)
    }

    /// max |M + M†| entry at `a`.
    pub fn anti_hermitian_residual(&self, a: &[Complex64]) -> Result<f64> {
        let m = self.matrix(a)?;
        Ok((&m + m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max))
    }
}

pub(crate) fn mat_vec(m: &CMatrix, a: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .map(|j| (0..m.ncols()).map(|k| m[(j, k)] * a[k]).sum())
        .collect()
}

/// M_jk = (iħ)⁻¹⟨φ_j|Hφ_k⟩ for an operator given as a field map.
pub fn galerkin_project(
    apply: impl Fn(&ComplexField) -> Result<ComplexField>,
    basis: &BasisSet,
    sys: &ParticleSystem,
) -> Result<Generator> {
    let h = galerkin_matrix(apply, basis)?;
    Generator::from_hamiltonian(&h, sys.hbar())
}

/// ⟨φ_j|Hφ_k⟩.
pub fn galerkin_matrix(apply: impl Fn(&ComplexField) -> Result<ComplexField>, basis: &BasisSet) -> Result<CMatrix> {
    if basis.orthonormality_residual() > ORTHONORMAL_TOLERANCE {
        return Err(Error::NotOrthonormal {
            residual: basis.orthonormality_residual(),
            tolerance: ORTHONORMAL_TOLERANCE,
        });
    }
    let fields = basis
        .fields()
        .ok_or_else(|| Error::InvalidArgument("galerkin projection needs a grid-backed basis".into()))?;
    let n = fields.len();
    let images = fields.iter().map(&apply).collect::<Result<Vec<_>>>()?;
    let mut h = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            h[(j, k)] = crate::field::inner_product(&fields[j], &images[k])?;
        }
    }
    Ok(h)
}

/// Projection of the linear Hamiltonian of `sys` onto `basis`.
pub fn galerkin_project_linear(basis: &BasisSet, sys: &ParticleSystem) -> Result<Generator> {
    let fields = basis
        .fields()
        .ok_or_else(|| Error::InvalidArgument("galerkin projection needs a grid-backed basis".into()))?;
    let h = Hamiltonian::new(fields[0].grid_arc().clone(), sys)?;
    galerkin_project(|f| ComplexField::new(f.grid_arc().clone(), h.apply(f.values())), basis, sys)
}

/// Δ(a) = Σ_j a*_j a_{j+1}.
pub fn order_parameter(a: &[Complex64]) -> Complex64 {
    a.windows(2).map(|w| w[0].conj() * w[1]).sum()
}

/// H(a) = diag(E) + g·(Δ(a)·L + Δ(a)*·L†) with L_{j,j+1} = 1.
pub fn toy_hamiltonian(energies: &[f64], g: f64, a: &[Complex64]) -> CMatrix {
    let n = energies.len();
    let delta = order_parameter(a);
    let mut h = CMatrix::zeros(n, n);
    for j in 0..n {
        h[(j, j)] = Complex64::new(energies[j], 0.0);
        if j + 1 < n {
            h[(j, j + 1)] = delta * g;
            h[(j + 1, j)] = delta.conj() * g;
        }
    }
    h
}

pub fn toy_nonlinear_generator(n: usize, g: f64, energies: &[f64], hbar: f64) -> Result<Generator> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("the toy generator needs N ≥ 3 for chaos to be possible, got {n}")));
    }
    if energies.len() != n {
        return Err(Error::InvalidArgument(format!("{} base energies for N = {n}", energies.len())));
    }
    if !g.is_finite() {
        return Err(Error::InvalidArgument("coupling g must be finite".into()));
    }
    let e = energies.to_vec();
    let e2 = e.clone();
    let gen = Generator::state_dependent(n, hbar, vec!["delta".into()], move |a| {
        if a.len() != e.len() {
            return Err(Error::InvalidArgument(format!("{} coefficients for N = {}", a.len(), e.len())));
        }
        Ok(toy_hamiltonian(&e, g, a))
    });
    // H(a)δa + g(δΔ·L + δΔ*·L†)a with δΔ = Σ δa*_j a_{j+1} + a*_j δa_{j+1}
    Ok(gen.with_tangent(move |a, da| {
        let delta = order_parameter(a);
        let dd: Complex64 = (0..n - 1).map(|j| da[j].conj() * a[j + 1] + a[j].conj() * da[j + 1]).sum();
        let mut out: Vec<Complex64> = da.iter().zip(&e2).map(|(d, e)| d * e).collect();
        for j in 0..n - 1 {
            out[j] += g * (delta * da[j + 1] + dd * a[j + 1]);
            out[j + 1] += g * (delta.conj() * da[j] + dd.conj() * a[j]);
        }
        Ok(out)
    }))
}

/// H(a) = H_linear + (ħ²/2m)|ψ_a|⁻¹∇²|ψ_a| projected on the basis, with
/// ψ_a = Σ a_j φ_j rebuilt on the grid at each evaluation.
pub fn noq_flow_generator(basis: &BasisSet, sys: &ParticleSystem, opts: &NoQOptions) -> Result<Generator> {
    let fields: Vec<ComplexField> = basis
        .fields()
        .ok_or_else(|| Error::InvalidArgument("the Q-removed generator needs a grid-backed basis".into()))?
        .to_vec();
    let ham = Arc::new(Hamiltonian::new(fields[0].grid_arc().clone(), sys)?);
    let linear = {
        let h = ham.clone();
        galerkin_matrix(|f| ComplexField::new(f.grid_arc().clone(), h.apply(f.values())), basis)?
    };
    let basis = basis.clone();
    let opts = *opts;
    Ok(Generator::state_dependent(fields.len(), sys.hbar(), vec!["|psi|".into()], move |a| {
        let psi = basis.reconstruct(a)?;
        let (n, frac) = noq_curvature(&ham, psi.values(), &opts);
        if frac >= 1.0 {
            return Err(Error::FullyMasked("reconstructed state is node-masked everywhere".into()));
        }
        let mut h = linear.clone();
        let quad = ham.quadrature();
        let k_count = fields.len();
        let weighted: Vec<Vec<Complex64>> = fields
            .iter()
            .map(|f| f.values().iter().zip(&n).zip(quad).map(|((v, n), w)| v * (n * w)).collect())
            .collect();
        for j in 0..k_count {
            for k in j..k_count {
                let v: Complex64 = fields[j].values().iter().zip(&weighted[k]).map(|(x, y)| x.conj() * y).sum();
                h[(j, k)] += v;
                if k != j {
                    h[(k, j)] += v.conj();
                }
            }
        }
        Ok(h)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_tangent_matches_central_difference() {
        let gen = toy_nonlinear_generator(4, 2.5, &[0.0, 1.0, 2.3, 3.7], 1.0).unwrap();
        let a = [Complex64::new(0.3, 0.1), Complex64::new(0.5, -0.2), Complex64::new(0.1, 0.4), Complex64::new(0.2, 0.0)];
        let da = [Complex64::new(-0.2, 0.7), Complex64::new(0.1, 0.1), Complex64::new(0.9, -0.3), Complex64::new(0.0, 0.5)];
        let exact = gen.tangent(&a, &da).unwrap().unwrap();
        let h = 1e-6;
        let shift = |s: f64| a.iter().zip(&da).map(|(x, d)| x + d * s).collect::<Vec<_>>();
        let plus = gen.rhs(&shift(h)).unwrap();
        let minus = gen.rhs(&shift(-h)).unwrap();
        for j in 0..4 {
            let fd = (plus[j] - minus[j]) / (2.0 * h);
            assert!((fd - exact[j]).norm() < 1e-8, "{j}: {fd} vs {}", exact[j]);
        }
    }

    #[test]
    fn zero_coupling_toy_is_diagonal() {
        let gen = toy_nonlinear_generator(4, 0.0, &[0.0, 1.0, 2.0, 3.5], 1.0).unwrap();
        let a = [Complex64::new(0.3, 0.1), Complex64::new(0.5, -0.2), Complex64::new(0.1, 0.4), Complex64::new(0.2, 0.0)];
        let m = gen.matrix(&a).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                if j != k {
                    assert_eq!(m[(j, k)], Complex64::default());
                }
            }
        }
        assert!(toy_nonlinear_generator(2, 1.0, &[0.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn toy_generator_is_anti_hermitian_everywhere() {
        let gen = toy_nonlinear_generator(5, 1.3, &[0.0, 0.7, 1.9, 2.2, 4.0], 1.0).unwrap();
        let a: Vec<Complex64> = (0..5).map(|j| Complex64::new((j as f64).sin(), (j as f64 * 0.7).cos())).collect();
        assert!(gen.anti_hermitian_residual(&a).unwrap() < 1e-14);
    }

    #[test]
    fn single_mode_has_no_order_parameter() {
        let a = [Complex64::default(), Complex64::new(1.0, 0.0), Complex64::default()];
        assert_eq!(order_parameter(&a), Complex64::default());
    }
}

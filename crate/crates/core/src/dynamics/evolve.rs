use std::sync::Arc;

use log::warn;
use num_complex::Complex64;

use super::config::{EvolverConfig, Scheme};
use super::hamiltonian::{noq_curvature, Hamiltonian, NoQOptions};
use super::linsolve::{bicgstab, solve_tridiagonal};
use super::record::{EvolutionRecord, PairRecord, StepDiagnostics};
use crate::error::{Error, Result};
use crate::field::{Boundary, ComplexField, ParticleSystem, SpatialGrid};

/// Which equation of motion a run integrates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Flow {
    /// iħ∂ψ/∂t = Hψ.
    Unitary,
    /// iħ∂ψ/∂t = [H + (ħ²/2m)|ψ|⁻¹∇²|ψ|]ψ, the flow with Q removed.
    NoQ(NoQOptions),
}

const CN_TOLERANCE: f64 = 1e-14;
const CN_MAX_ITER: usize = 500;

struct Stepper {
    h: Hamiltonian,
    dt: f64,
    scheme: Scheme,
    flow: Flow,
    kinetic_phase: Vec<Complex64>,
    last_mask: f64,
}

impl Stepper {
    fn new(grid: Arc<SpatialGrid>, system: &ParticleSystem, cfg: &EvolverConfig, flow: Flow) -> Result<Self> {
        cfg.validate_for(&grid, system)?;
        match (flow, cfg.scheme) {
            (Flow::Unitary, Scheme::ExplicitRk4) => {
                return Err(Error::SchemeMismatch {
                    scheme: cfg.scheme.to_string(),
                    reason: "explicit RK4 is reserved for the Q-removed flow".into(),
                })
            }
            (Flow::NoQ(_), Scheme::CrankNicolson) => {
                return Err(Error::SchemeMismatch {
                    scheme: cfg.scheme.to_string(),
                    reason: "the Q-removed flow needs explicit_rk4 or split_step_fourier".into(),
                })
            }
            _ => {}
        }
        let h = Hamiltonian::new(grid, system)?;
        let kinetic_phase = if cfg.scheme == Scheme::SplitStepFourier {
            let plan = h.plan().expect("periodic grid has a spectral plan");
            let axes: Vec<usize> = (0..h.grid().total_dim()).collect();
            plan.k_squared_table(h.grid(), &axes, h.kinetic_weights())
                .into_iter()
                .map(|t| Complex64::from_polar(1.0, -t * cfg.dt / system.hbar()))
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            h,
            dt: cfg.dt,
            scheme: cfg.scheme,
            flow,
            kinetic_phase,
            last_mask: 0.0,
        })
    }

    fn hbar(&self) -> f64 {
        self.h.system().hbar()
    }

    /// V plus, for the Q-removed flow, the state-dependent curvature term.
    fn effective_potential(&mut self, psi: &[Complex64]) -> Vec<f64> {
        match self.flow {
            Flow::NoQ(opts) if opts.include_nonlinear => {
                let (n, frac) = noq_curvature(&self.h, psi, &opts);
                self.last_mask = frac;
                n.iter().zip(self.h.potential()).map(|(a, b)| a + b).collect()
            }
            _ => self.h.potential().to_vec(),
        }
    }

    fn step(&mut self, psi: &mut Vec<Complex64>, t: f64) -> Result<()> {
        match self.scheme {
            Scheme::SplitStepFourier => self.step_split(psi, t),
            Scheme::CrankNicolson => self.step_cn(psi, t),
            Scheme::ExplicitRk4 => self.step_rk4(psi, t),
        }
    }

    fn half_potential_kick(&mut self, psi: &mut [Complex64]) {
        let w = self.effective_potential(psi);
        let c = -0.5 * self.dt / self.hbar();
        for (p, v) in psi.iter_mut().zip(&w) {
            *p *= Complex64::from_polar(1.0, c * v);
        }
    }

    // The potential kick leaves |ψ| unchanged, so the curvature term is
    // constant within each half kick and the kick is exact.
    fn step_split(&mut self, psi: &mut [Complex64], t: f64) -> Result<()> {
        self.h.set_time(t + 0.5 * self.dt)?;
        self.half_potential_kick(psi);
        let plan = self.h.plan().expect("periodic grid");
        plan.forward_all(psi);
        for (p, k) in psi.iter_mut().zip(&self.kinetic_phase) {
            *p *= k;
        }
        plan.inverse_all(psi);
        self.half_potential_kick(psi);
        Ok(())
    }

    fn step_cn(&mut self, psi: &mut Vec<Complex64>, t: f64) -> Result<()> {
        self.h.set_time(t + 0.5 * self.dt)?;
        let tau = Complex64::new(0.0, 0.5 * self.dt / self.hbar());
        let hpsi = self.h.apply(psi);
        let rhs: Vec<Complex64> = psi.iter().zip(&hpsi).map(|(p, hp)| p - tau * hp).collect();
        let grid = self.h.grid().clone();
        if grid.boundary() == Boundary::Dirichlet && grid.total_dim() == 1 {
            let n = grid.len();
            let w = self.h.kinetic_weights()[0];
            let dx = grid.spacing(0);
            let off = -tau * w / (dx * dx);
            let diag: Vec<Complex64> = (1..n - 1)
                .map(|i| Complex64::new(1.0, 0.0) + tau * (2.0 * w / (dx * dx) + self.h.potential()[i]))
                .collect();
            let interior = solve_tridiagonal(off, &diag, off, &rhs[1..n - 1]);
            psi[0] = Complex64::default();
            psi[n - 1] = Complex64::default();
            psi[1..n - 1].copy_from_slice(&interior);
        } else {
            let h = &self.h;
            let apply = |x: &[Complex64]| -> Vec<Complex64> {
                let hx = h.apply(x);
                x.iter().zip(&hx).map(|(a, b)| a + tau * b).collect()
            };
            bicgstab(apply, &rhs, psi, CN_TOLERANCE, CN_MAX_ITER)?;
            if grid.boundary() == Boundary::Dirichlet {
                let all: Vec<usize> = (0..grid.total_dim()).collect();
                for (i, p) in psi.iter_mut().enumerate() {
                    if grid.on_boundary(i, &all) {
                        *p = Complex64::default();
                    }
                }
            }
        }
        Ok(())
    }

    fn rhs(&mut self, psi: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        self.h.set_time(t)?;
        let w = self.effective_potential(psi);
        let lap = self.h.weighted_laplacian(psi, self.h.kinetic_weights());
        let c = Complex64::new(0.0, -1.0 / self.hbar());
        Ok(lap
            .iter()
            .zip(psi)
            .zip(&w)
            .map(|((l, p), v)| c * (-l + p * v))
            .collect())
    }

    fn step_rk4(&mut self, psi: &mut [Complex64], t: f64) -> Result<()> {
        let dt = self.dt;
        let axpy = |a: &[Complex64], k: &[Complex64], s: f64| -> Vec<Complex64> {
            a.iter().zip(k).map(|(x, y)| x + y * s).collect()
        };
        let k1 = self.rhs(psi, t)?;
        // mask coverage is reported for the state at the start of the step
        let frac = self.last_mask;
        let k2 = self.rhs(&axpy(psi, &k1, 0.5 * dt), t + 0.5 * dt)?;
        let k3 = self.rhs(&axpy(psi, &k2, 0.5 * dt), t + 0.5 * dt)?;
        let k4 = self.rhs(&axpy(psi, &k3, dt), t + dt)?;
        self.last_mask = frac;
        for i in 0..psi.len() {
            psi[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0);
        }
        Ok(())
    }

    fn mask_fraction_of(&self, psi: &[Complex64]) -> f64 {
        match self.flow {
            Flow::NoQ(opts) if opts.include_nonlinear => {
                let r_max = psi.iter().map(|v| v.norm()).fold(0.0, f64::max);
                let eps = opts.eps_node_rel * r_max;
                psi.iter().filter(|v| v.norm() < eps).count() as f64 / psi.len() as f64
            }
            _ => 0.0,
        }
    }
}

/// One running evolution: state, stepper and the record being built.
struct Run {
    stepper: Stepper,
    psi: Vec<Complex64>,
    grid: Arc<SpatialGrid>,
    record: EvolutionRecord,
    stride: usize,
    mask_warned: bool,
}

impl Run {
    fn start(psi0: &ComplexField, system: &ParticleSystem, cfg: &EvolverConfig, flow: Flow) -> Result<Self> {
        let stepper = Stepper::new(psi0.grid_arc().clone(), system, cfg, flow)?;
        let mut warnings = Vec::new();
        let n0 = stepper.h.norm_sqr(psi0.values()).sqrt();
        if (n0 - 1.0).abs() > 1e-6 {
            let msg = format!("initial state norm {n0} differs from 1 by more than 1e-6");
            warn!("{msg}");
            warnings.push(msg);
        }
        let record = EvolutionRecord {
            dt: cfg.dt,
            record_stride: cfg.record_stride,
            times: vec![0.0],
            snapshots: vec![psi0.clone()],
            norms: vec![n0],
            steps: Vec::new(),
            warnings,
        };
        let mut run = Self {
            psi: psi0.values().to_vec(),
            grid: psi0.grid_arc().clone(),
            stepper,
            record,
            stride: cfg.record_stride,
            mask_warned: false,
        };
        let mask = run.stepper.mask_fraction_of(&run.psi);
        run.push_diagnostics(0, 0.0, mask);
        Ok(run)
    }

    fn push_diagnostics(&mut self, step: usize, t: f64, mask: f64) {
        let norm = self.stepper.h.norm_sqr(&self.psi).sqrt();
        let energy = self.stepper.h.energy(&self.psi);
        if let Flow::NoQ(opts) = self.stepper.flow {
            if mask > opts.mask_warn_fraction && !self.mask_warned {
                let msg = format!(
                    "step {step}: {:.2}% of grid points are node-masked (above {:.2}%)",
                    100.0 * mask,
                    100.0 * opts.mask_warn_fraction
                );
                warn!("{msg}");
                self.record.warnings.push(msg);
                self.mask_warned = true;
            }
        }
        self.record.steps.push(StepDiagnostics {
            step,
            t,
            norm,
            energy,
            mask_fraction: mask,
            divergence: None,
        });
    }

    fn advance(&mut self, step: usize) -> Result<()> {
        let t = (step - 1) as f64 * self.stepper.dt;
        self.stepper.step(&mut self.psi, t)?;
        if let Some(i) = self.psi.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step,
                what: format!("wavefunction sample {i}"),
            });
        }
        let t_new = step as f64 * self.stepper.dt;
        let mask = self.stepper.last_mask;
        self.push_diagnostics(step, t_new, mask);
        if step.is_multiple_of(self.stride) {
            let snap = ComplexField::from_parts(self.grid.clone(), self.psi.clone());
            self.record.norms.push(self.stepper.h.norm_sqr(&self.psi).sqrt());
            self.record.times.push(t_new);
            self.record.snapshots.push(snap);
        }
        Ok(())
    }
}

/// Unitary time evolution under the linear Schrödinger equation.
pub fn evolve_tdse(
    psi0: &ComplexField,
    system: &ParticleSystem,
    cfg: &EvolverConfig,
    steps: usize,
) -> Result<EvolutionRecord> {
    evolve(psi0, system, cfg, steps, Flow::Unitary)
}

/// Evolution with the quantum potential removed from the Hamilton–Jacobi
/// equation. The state is never renormalized.
pub fn evolve_noq(
    psi0: &ComplexField,
    system: &ParticleSystem,
    cfg: &EvolverConfig,
    steps: usize,
    opts: &NoQOptions,
) -> Result<EvolutionRecord> {
    evolve(psi0, system, cfg, steps, Flow::NoQ(*opts))
}

pub fn evolve(
    psi0: &ComplexField,
    system: &ParticleSystem,
    cfg: &EvolverConfig,
    steps: usize,
    flow: Flow,
) -> Result<EvolutionRecord> {
    let mut run = Run::start(psi0, system, cfg, flow)?;
    for step in 1..=steps {
        run.advance(step)?;
    }
    Ok(run.record)
}

/// Evolves ψ and φ in lockstep and tracks D(t) = ∫|ψ−φ|²dτ and ⟨φ|ψ⟩.
pub fn evolve_pair(
    psi0: &ComplexField,
    phi0: &ComplexField,
    system: &ParticleSystem,
    cfg: &EvolverConfig,
    steps: usize,
    flow: Flow,
) -> Result<PairRecord> {
    psi0.grid().check_same(phi0.grid())?;
    let mut a = Run::start(psi0, system, cfg, flow)?;
    let mut b = Run::start(phi0, system, cfg, flow)?;
    let mut divergence = Vec::with_capacity(steps + 1);
    let mut overlap = Vec::with_capacity(steps + 1);
    let mut measure = |a: &mut Run, b: &Run| {
        let ip = a.stepper.h.inner(&b.psi, &a.psi);
        let diff: Vec<Complex64> = a.psi.iter().zip(&b.psi).map(|(x, y)| x - y).collect();
        let d = a.stepper.h.norm_sqr(&diff);
        if let Some(s) = a.record.steps.last_mut() {
            s.divergence = Some(d);
        }
        divergence.push(d);
        overlap.push(ip);
    };
    measure(&mut a, &b);
    for step in 1..=steps {
        a.advance(step)?;
        b.advance(step)?;
        measure(&mut a, &b);
    }
    for (sb, sa) in b.record.steps.iter_mut().zip(&a.record.steps) {
        sb.divergence = sa.divergence;
    }
    Ok(PairRecord {
        psi: a.record,
        phi: b.record,
        divergence,
        overlap,
    })
}

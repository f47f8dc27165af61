//! Wavefunction time evolution: the unitary Schrödinger flow and the
//! nonlinear, non-unitary flow obtained by removing the quantum potential,
//! with the divergence and Hermiticity diagnostics that contrast them.

mod config;
mod diagnostics;
mod evolve;
mod hamiltonian;
mod linsolve;
mod record;

pub use config::{EvolverConfig, Scheme, DEFAULT_RK4_STABILITY};
pub use diagnostics::{divergence_measure, hermiticity_defect, hermiticity_defect_with};
pub use evolve::{evolve, evolve_noq, evolve_pair, evolve_tdse, Flow};
pub use hamiltonian::{noq_curvature, Hamiltonian, NoQOptions};
pub use record::{EvolutionRecord, PairRecord, StepDiagnostics};

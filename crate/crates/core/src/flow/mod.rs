//! Coefficient flows da/dt = M(a)·a on truncated bases, and their Lyapunov
//! spectra.

pub mod basis;
pub mod generator;
pub mod integrate;
pub mod lyapunov;

pub use basis::{BasisSet, ORTHONORMAL_TOLERANCE};
pub use generator::{
    galerkin_matrix, galerkin_project, galerkin_project_linear, noq_flow_generator, order_parameter,
    toy_hamiltonian, toy_nonlinear_generator, CMatrix, Generator, GeneratorKind,
};
pub use integrate::{integrate_flow, rk4_step, CoefficientState};
pub use lyapunov::{
    generator_spectrum, lyapunov_spectrum, to_complex, to_real, DiagonalFlow, GeneratorFlow, LyapunovOptions,
    LyapunovResult, RealFlow,
};

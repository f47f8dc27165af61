//! Numerical toolkit for the causal (pilot-wave) formulation of quantum
//! mechanics.
//!
//! * [`field`]: grids, complex fields, derivatives, polar form.
//! * [`dynamics`]: unitary and Q-removed wavefunction evolution.
//! * [`bohm`]: quantum potential, quantum forces, guidance velocity, trajectories.
//! * [`flow`]: Galerkin coefficient flows and Lyapunov spectra.
//! * [`scenarios`]: named physical setups with analytic references and checks.
//! * [`runner`]: configuration, orchestration and persisted outputs.

pub mod error;
pub mod field;
pub mod dynamics;
pub mod bohm;
pub mod io;
pub mod states;
pub mod flow;
pub mod scenarios;
pub mod runner;

pub use error::{Error, Result};
pub use num_complex::Complex64;

//! Quantum potential, quantum and classical forces, guidance velocity and
//! Bohmian trajectories.

mod potential;
pub mod radial;
mod trajectory;
mod velocity;

pub use potential::{
    classical_force, force_balance_report, quantum_force, quantum_potential, ForceReport, QuantumPotentialField,
    VectorField,
};
pub use trajectory::{
    force_history, integrate_trajectory, least_squares_slope, newton_residual, newton_residual_with,
    trajectory_separation, trajectory_separation_with, FitWindow, Sample, Separation, SpaceTimeField, Trajectory,
    TrajectoryOptions, VelocityHistory,
};
pub use velocity::{bohm_velocity, guidance_field};

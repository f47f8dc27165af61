//! Closed-form reference states and their analytic time dependence.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::field::{ComplexField, SpatialGrid};

/// 1D Gaussian packet with position spread `sigma` (std of |ψ|²), mean
/// momentum ħ·k0 and an optional phase chirp ½·chirp·(x − x0)².
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GaussianPacket {
    pub x0: f64,
    pub sigma: f64,
    pub k0: f64,
    pub chirp: f64,
}

impl GaussianPacket {
    pub fn new(x0: f64, sigma: f64, k0: f64) -> Self {
        Self { x0, sigma, k0, chirp: 0.0 }
    }

    pub fn value(&self, x: f64) -> Complex64 {
        let d = x - self.x0;
        let amp = (2.0 * PI * self.sigma * self.sigma).powf(-0.25) * (-d * d / (4.0 * self.sigma * self.sigma)).exp();
        Complex64::from_polar(amp, self.k0 * x + 0.5 * self.chirp * d * d)
    }

    /// Samples along axis `axis`; other axes are ignored.
    pub fn sample(&self, grid: &Arc<SpatialGrid>, axis: usize) -> Result<ComplexField> {
        ComplexField::from_fn(grid.clone(), |x| self.value(x[axis]))
    }

    /// Spread σ(t) = σ₀·sqrt(1 + (ħt/2mσ₀²)²) of the free, unchirped packet.
    pub fn free_sigma(&self, t: f64, hbar: f64, mass: f64) -> f64 {
        let tau = hbar * t / (2.0 * mass * self.sigma * self.sigma);
        self.sigma * (1.0 + tau * tau).sqrt()
    }

    pub fn free_centre(&self, t: f64, hbar: f64, mass: f64) -> f64 {
        self.x0 + hbar * self.k0 * t / mass
    }

    /// Guidance velocity of the free, unchirped packet.
    pub fn free_velocity(&self, x: f64, t: f64, hbar: f64, mass: f64) -> f64 {
        let rate = hbar / (2.0 * mass * self.sigma * self.sigma);
        hbar * self.k0 / mass + (x - self.free_centre(t, hbar, mass)) * rate * rate * t / (1.0 + rate * rate * t * t)
    }

    /// Bohmian trajectory through `x_start` at t = 0 (scaling law).
    pub fn free_trajectory(&self, x_start: f64, t: f64, hbar: f64, mass: f64) -> f64 {
        self.free_centre(t, hbar, mass) + (x_start - self.x0) * self.free_sigma(t, hbar, mass) / self.sigma
    }
}

/// Harmonic-oscillator eigenfunctions and coherent states in one dimension.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Oscillator {
    pub mass: f64,
    pub omega: f64,
    pub hbar: f64,
}

impl Oscillator {
    pub fn natural() -> Self {
        Self {
            mass: 1.0,
            omega: 1.0,
            hbar: 1.0,
        }
    }

    pub fn length(&self) -> f64 {
        (self.hbar / (self.mass * self.omega)).sqrt()
    }

    pub fn energy(&self, n: usize) -> f64 {
        self.hbar * self.omega * (n as f64 + 0.5)
    }

    pub fn stiffness(&self) -> f64 {
        self.mass * self.omega * self.omega
    }

    /// ψ_n(x), normalized, by the stable three-term recursion.
    pub fn eigenfunction(&self, n: usize, x: f64) -> f64 {
        let xi = x / self.length();
        let mut prev = 0.0;
        let mut cur = (PI * self.length() * self.length()).powf(-0.25) * (-0.5 * xi * xi).exp();
        for k in 0..n {
            let next = (2.0 / (k + 1) as f64).sqrt() * xi * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
            prev = cur;
            cur = next;
        }
        cur
    }

    pub fn sample_eigenfunction(&self, n: usize, grid: &Arc<SpatialGrid>, axis: usize) -> Result<ComplexField> {
        ComplexField::from_fn(grid.clone(), |x| Complex64::new(self.eigenfunction(n, x[axis]), 0.0))
    }

    /// Ground state displaced to `x0` with mean momentum `p0`.
    pub fn coherent(&self, x0: f64, p0: f64, x: f64) -> Complex64 {
        Complex64::from_polar(self.eigenfunction(0, x - x0), p0 * x / self.hbar)
    }

    pub fn sample_coherent(&self, x0: f64, p0: f64, grid: &Arc<SpatialGrid>, axis: usize) -> Result<ComplexField> {
        ComplexField::from_fn(grid.clone(), |x| self.coherent(x0, p0, x[axis]))
    }

    /// Classical centre of a coherent state, x_c(t) = x0 cos ωt + p0/(mω) sin ωt.
    pub fn classical_centre(&self, x0: f64, p0: f64, t: f64) -> f64 {
        x0 * (self.omega * t).cos() + p0 / (self.mass * self.omega) * (self.omega * t).sin()
    }

    pub fn classical_momentum(&self, x0: f64, p0: f64, t: f64) -> f64 {
        -self.mass * self.omega * x0 * (self.omega * t).sin() + p0 * (self.omega * t).cos()
    }
}

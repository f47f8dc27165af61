use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Boundary, ParticleSystem, SpatialGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Strang splitting exp(−iVdt/2ħ)·exp(−iTdt/ħ)·exp(−iVdt/2ħ); periodic grids only.
    SplitStepFourier,
    /// (1 + iHdt/2ħ)ψ' = (1 − iHdt/2ħ)ψ; either boundary.
    CrankNicolson,
    /// Classical RK4 on the full right-hand side; Q-removed flow only.
    ExplicitRk4,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::SplitStepFourier => "split_step_fourier",
            Scheme::CrankNicolson => "crank_nicolson",
            Scheme::ExplicitRk4 => "explicit_rk4",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split_step_fourier" | "ssf" => Ok(Scheme::SplitStepFourier),
            "crank_nicolson" | "cn" => Ok(Scheme::CrankNicolson),
            "explicit_rk4" | "rk4" => Ok(Scheme::ExplicitRk4),
            other => Err(Error::InvalidArgument(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Default RK4 stability constant c in dt ≤ c·h²·m/ħ.
pub const DEFAULT_RK4_STABILITY: f64 = 0.2;

#[derive(Clone, Debug, PartialEq)]
pub struct EvolverConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub record_stride: usize,
    pub rk4_stability: f64,
}

impl EvolverConfig {
    pub fn new(dt: f64, scheme: Scheme, record_stride: usize) -> Result<Self> {
        let cfg = Self {
            dt,
            scheme,
            record_stride,
            rk4_stability: DEFAULT_RK4_STABILITY,
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn with_rk4_stability(mut self, c: f64) -> Result<Self> {
        self.rk4_stability = c;
        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidArgument("record_stride must be at least 1".into()));
        }
        if !(self.rk4_stability > 0.0) {
            return Err(Error::InvalidArgument("rk4 stability constant must be positive".into()));
        }
        Ok(())
    }

    /// Scheme/boundary compatibility and the explicit stability bound.
    pub fn validate_for(&self, grid: &SpatialGrid, system: &ParticleSystem) -> Result<()> {
        self.check()?;
        if self.scheme == Scheme::SplitStepFourier && grid.boundary() != Boundary::Periodic {
            return Err(Error::SchemeMismatch {
                scheme: self.scheme.to_string(),
                reason: "split-step Fourier requires a periodic grid".into(),
            });
        }
        if self.scheme == Scheme::ExplicitRk4 {
            let m_min = system.masses().iter().copied().fold(f64::INFINITY, f64::min);
            let h = grid.min_spacing();
            let bound = self.rk4_stability * h * h * m_min / system.hbar();
            if self.dt > bound {
                return Err(Error::SchemeMismatch {
                    scheme: self.scheme.to_string(),
                    reason: format!("dt = {} exceeds the RK4 stability bound {bound:e}", self.dt),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Potential;

    #[test]
    fn rejects_nonpositive_dt() {
        assert!(EvolverConfig::new(0.0, Scheme::CrankNicolson, 1).is_err());
        assert!(EvolverConfig::new(-1.0, Scheme::CrankNicolson, 1).is_err());
        assert!(EvolverConfig::new(0.1, Scheme::CrankNicolson, 0).is_err());
    }

    #[test]
    fn split_step_needs_periodic_grid() {
        let g = SpatialGrid::cube(1, 16, 0.0, 1.0, Boundary::Dirichlet).unwrap();
        let s = ParticleSystem::single(1.0, 1, 1.0, Potential::free()).unwrap();
        let cfg = EvolverConfig::new(0.01, Scheme::SplitStepFourier, 1).unwrap();
        assert!(matches!(cfg.validate_for(&g, &s), Err(Error::SchemeMismatch { .. })));
    }

    #[test]
    fn rk4_stability_bound() {
        let g = SpatialGrid::cube(1, 100, 0.0, 10.0, Boundary::Periodic).unwrap();
        let s = ParticleSystem::single(1.0, 1, 1.0, Potential::free()).unwrap();
        assert!(EvolverConfig::new(0.002, Scheme::ExplicitRk4, 1).unwrap().validate_for(&g, &s).is_ok());
        assert!(EvolverConfig::new(0.003, Scheme::ExplicitRk4, 1).unwrap().validate_for(&g, &s).is_err());
    }
}

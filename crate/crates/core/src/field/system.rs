use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use super::grid::SpatialGrid;
use super::ops::AxisGroup;
use super::values::RealField;
use crate::error::{Error, Result};

type PotentialFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;

/// Classical potential energy V(x, t) over configuration space.
#[derive(Clone)]
pub struct Potential {
    f: Arc<PotentialFn>,
    time_dependent: bool,
    label: String,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("label", &self.label)
            .field("time_dependent", &self.time_dependent)
            .finish()
    }
}

impl Potential {
    pub fn free() -> Self {
        Self::static_fn("free", |_| 0.0)
    }

    /// V = Σ_a ½·m_a·ω_a²·(x_a − c_a)².
    pub fn harmonic(stiffness: Vec<f64>, centre: Vec<f64>) -> Self {
        let label = format!("harmonic k={stiffness:?}");
        Self::static_fn(label, move |x| {
            x.iter()
                .zip(&stiffness)
                .zip(&centre)
                .map(|((&xi, &k), &c)| 0.5 * k * (xi - c) * (xi - c))
                .sum()
        })
    }

    pub fn static_fn(label: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(move |x, _t| f(x)),
            time_dependent: false,
            label: label.into(),
        }
    }

    pub fn time_dependent(label: impl Into<String>, f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            time_dependent: true,
            label: label.into(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        (self.f)(x, t)
    }

    pub fn sample(&self, grid: &Arc<SpatialGrid>, t: f64) -> Result<RealField> {
        let field = RealField::from_fn(grid.clone(), |x| self.eval(x, t));
        field.map_err(|_| Error::InvalidArgument(format!("potential `{}` is not finite on the grid", self.label)))
    }
}

/// Particle content of a configuration space: masses, per-particle spatial
/// dimension, ħ and the classical potential.
#[derive(Clone, Debug)]
pub struct ParticleSystem {
    masses: Vec<f64>,
    dims: Vec<usize>,
    offsets: Vec<usize>,
    hbar: f64,
    potential: Potential,
}

impl ParticleSystem {
    pub fn new(masses: Vec<f64>, dims: Vec<usize>, hbar: f64, potential: Potential) -> Result<Self> {
        if masses.is_empty() || masses.len() != dims.len() {
            return Err(Error::InvalidArgument(format!(
                "{} masses for {} particles",
                masses.len(),
                dims.len()
            )));
        }
        if let Some(m) = masses.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidArgument(format!("particle mass must be positive, got {m}")));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("particle dimension must be at least 1".into()));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0;
        for &d in &dims {
            offsets.push(acc);
            acc += d;
        }
        Ok(Self {
            masses,
            dims,
            offsets,
            hbar,
            potential,
        })
    }

    /// One particle of mass `mass` in `dim` dimensions.
    pub fn single(mass: f64, dim: usize, hbar: f64, potential: Potential) -> Result<Self> {
        Self::new(vec![mass], vec![dim], hbar, potential)
    }

    pub fn particle_count(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, particle: usize) -> f64 {
        self.masses[particle]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn with_potential(&self, potential: Potential) -> Self {
        Self {
            potential,
            ..self.clone()
        }
    }

    pub fn axes(&self, particle: usize) -> Result<Range<usize>> {
        if particle >= self.masses.len() {
            return Err(Error::ParticleOutOfRange {
                index: particle,
                count: self.masses.len(),
            });
        }
        let start = self.offsets[particle];
        Ok(start..start + self.dims[particle])
    }

    pub fn axis_group(&self, particle: usize) -> Result<AxisGroup> {
        Ok(AxisGroup::Axes(self.axes(particle)?))
    }

    /// Mass owning configuration axis `axis`.
    pub fn axis_mass(&self, axis: usize) -> f64 {
        let p = self
            .offsets
            .iter()
            .rposition(|&o| o <= axis)
            .unwrap_or(0);
        self.masses[p]
    }

    /// ħ²/2m per configuration axis, the weights of the kinetic operator.
    pub fn kinetic_weights(&self) -> Vec<f64> {
        (0..self.total_dim())
            .map(|a| self.hbar * self.hbar / (2.0 * self.axis_mass(a)))
            .collect()
    }

    pub fn check_grid(&self, grid: &SpatialGrid) -> Result<()> {
        if grid.total_dim() != self.total_dim() {
            return Err(Error::GridMismatch(format!(
                "system spans {} dimensions, grid has {}",
                self.total_dim(),
                grid.total_dim()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes_follow_particle_layout() {
        let s = ParticleSystem::new(vec![1.0, 2.0], vec![1, 2], 1.0, Potential::free()).unwrap();
        assert_eq!(s.axes(0).unwrap(), 0..1);
        assert_eq!(s.axes(1).unwrap(), 1..3);
        assert_eq!(s.axis_mass(2), 2.0);
        assert_eq!(s.kinetic_weights(), vec![0.5, 0.25, 0.25]);
        assert!(s.axes(2).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ParticleSystem::single(0.0, 1, 1.0, Potential::free()).is_err());
        assert!(ParticleSystem::single(1.0, 1, -1.0, Potential::free()).is_err());
        assert!(ParticleSystem::new(vec![1.0], vec![1, 1], 1.0, Potential::free()).is_err());
    }

    #[test]
    fn harmonic_potential_value() {
        let v = Potential::harmonic(vec![4.0], vec![1.0]);
        assert_eq!(v.eval(&[2.0], 0.0), 2.0);
    }
}

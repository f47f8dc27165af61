//! Named physical setups with analytic references, wired to acceptance
//! checks.

mod checks;

pub use checks::{run_sweep, sweep_csv, SweepRow};
pub mod params;
pub mod report;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::Table;

pub use params::*;
pub use report::{AcceptanceReport, Artifact, ArtifactData, Check, Relation};

use crate::bohm::TrajectoryOptions;
use crate::dynamics::EvolverConfig;
use crate::error::{Error, Result};
use crate::field::{Boundary, ParticleSystem, Potential, SpatialGrid};
use crate::runner::config::{merge_table, EvolverSection, RunConfig, ScenarioSection};

/// Catalog names with the acceptance criteria each one covers.
pub const CATALOG: &[(&str, &[u8], &str)] = &[
    ("ho_ground", &[1], "oscillator ground state: Q + V = ħω/2, v = 0, fixed trajectories"),
    ("hydrogen_radial", &[2], "reduced-mass hydrogen ground state: quantum repulsion balances Coulomb attraction"),
    ("two_particle_cm_planewave", &[3], "two free particles, plane-wave centre of mass: ∇₁Q + ∇₂Q = 0"),
    ("free_gaussian", &[4, 5], "spreading free Gaussian: ensemble force and the scaling-law trajectories"),
    ("ho_coherent", &[4], "oscillator coherent state: ensemble force and rigid Bohmian motion"),
    ("noQ_divergence_pair", &[6], "Q-removed flow of two translated chirped Gaussians: norms kept, D(t) moves"),
    ("hermiticity_pair", &[7], "Hermiticity defect of the Q-removed Hamiltonian under grid refinement"),
    ("galerkin_baseline", &[8], "Lyapunov spectra of linear Galerkin flows and a diagonal real flow"),
    ("toy_chaos_sweep", &[9], "largest Lyapunov exponent of the toy order-parameter flow over g"),
];

pub fn catalog_names() -> Vec<&'static str> {
    CATALOG.iter().map(|c| c.0).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioParams {
    FreeGaussian(FreeGaussianParams),
    HoGround(OscillatorParams),
    HoCoherent(CoherentParams),
    HydrogenRadial(HydrogenParams),
    TwoParticleCm(PlaneWavePairParams),
    DivergencePair(DivergencePairParams),
    Hermiticity(HermiticityParams),
    Galerkin(GalerkinParams),
    ToySweep(ToySweepParams),
}

fn table_of<T: Serialize>(p: &T) -> Table {
    Table::try_from(p).expect("scenario parameters always serialize")
}

fn params_from<T: Serialize + DeserializeOwned + Default>(user: &Table) -> Result<T> {
    let mut base = table_of(&T::default());
    merge_table(&mut base, user, "scenario.params", true, &mut Vec::new())?;
    toml::Value::Table(base).try_into().map_err(|e: toml::de::Error| Error::ConfigValidation {
        key: "scenario.params".into(),
        message: e.message().to_string(),
    })
}

impl ScenarioParams {
    pub fn defaults(name: &str) -> Result<Self> {
        Self::from_table(name, &Table::new())
    }

    pub fn from_table(name: &str, t: &Table) -> Result<Self> {
        let p = match name {
            "free_gaussian" => Self::FreeGaussian(params_from(t)?),
            "ho_ground" => Self::HoGround(params_from(t)?),
            "ho_coherent" => Self::HoCoherent(params_from(t)?),
            "hydrogen_radial" => Self::HydrogenRadial(params_from(t)?),
            "two_particle_cm_planewave" => Self::TwoParticleCm(params_from(t)?),
            "noQ_divergence_pair" => Self::DivergencePair(params_from(t)?),
            "hermiticity_pair" => Self::Hermiticity(params_from(t)?),
            "galerkin_baseline" => Self::Galerkin(params_from(t)?),
            "toy_chaos_sweep" => Self::ToySweep(params_from(t)?),
            other => return Err(Error::UnknownScenario(other.into())),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::FreeGaussian(p) => p.validate(),
            Self::HoGround(p) => p.validate(),
            Self::HoCoherent(p) => p.validate(),
            Self::HydrogenRadial(p) => p.validate(),
            Self::TwoParticleCm(p) => p.validate(),
            Self::DivergencePair(p) => p.validate(),
            Self::Hermiticity(p) => p.validate(),
            Self::Galerkin(p) => p.validate(),
            Self::ToySweep(p) => p.validate(),
        }
    }

    pub fn to_table(&self) -> Table {
        match self {
            Self::FreeGaussian(p) => table_of(p),
            Self::HoGround(p) => table_of(p),
            Self::HoCoherent(p) => table_of(p),
            Self::HydrogenRadial(p) => table_of(p),
            Self::TwoParticleCm(p) => table_of(p),
            Self::DivergencePair(p) => table_of(p),
            Self::Hermiticity(p) => table_of(p),
            Self::Galerkin(p) => table_of(p),
            Self::ToySweep(p) => table_of(p),
        }
    }
}

fn thresholds(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn default_thresholds(name: &str) -> BTreeMap<String, f64> {
    match name {
        "ho_ground" => thresholds(&[
            ("q_plus_v_rel_std", 1e-4),
            ("q_plus_v_offset", 1e-4),
            ("velocity", 1e-10),
            ("static_drift", 1e-6),
            ("newton_residual", 1e-4),
        ]),
        "hydrogen_radial" => thresholds(&[("force_balance", 1e-3), ("velocity", 1e-10), ("energy_offset", 1e-3)]),
        "two_particle_cm_planewave" => {
            thresholds(&[("pair_cancellation", 1e-6), ("quantum_force_floor", 0.1), ("velocity", 1e-8)])
        }
        "free_gaussian" => thresholds(&[("ensemble_force", 1e-6), ("scaling_law", 1e-3)]),
        "ho_coherent" => thresholds(&[("ensemble_force", 1e-6), ("rigid_motion", 1e-3)]),
        "noQ_divergence_pair" => thresholds(&[
            ("divergence_growth_factor", 10.0),
            ("unitary_divergence", 1e-8),
            ("closed_form", 1e-6),
        ]),
        "hermiticity_pair" => thresholds(&[
            ("self_defect", 1e-12),
            ("defect_floor", 1e-6),
            ("refinement", 1e-3),
            ("analytic", 1e-6),
        ]),
        "galerkin_baseline" => thresholds(&[
            ("constant_exponent", 1e-3),
            ("diagonal_exponent", 1e-4),
            ("anti_hermitian", 1e-10),
            ("trace_sum", 1e-3),
        ]),
        "toy_chaos_sweep" => thresholds(&[("reproducibility_ratio", 2.0)]),
        _ => BTreeMap::new(),
    }
}

/// Catalog defaults for `name` as a complete run configuration.
pub fn default_config(name: &str) -> Result<RunConfig> {
    let params = ScenarioParams::defaults(name)?;
    let mut c = RunConfig::skeleton(ScenarioSection {
        name: name.into(),
        params: params.to_table(),
        thresholds: default_thresholds(name),
    });
    let ev = |dt: f64, steps: usize, record_stride: usize| EvolverSection {
        dt,
        steps,
        record_stride,
        ..EvolverSection::default()
    };
    match name {
        "ho_ground" => c.evolver = ev(1e-3, 2000, 50),
        // one period at dt = 1e-3, snapshots every 0.01
        "ho_coherent" => c.evolver = ev(1e-3, 6283, 10),
        "two_particle_cm_planewave" => c.evolver = ev(1e-3, 200, 20),
        "noQ_divergence_pair" => c.evolver = ev(1e-3, 2000, 500),
        "galerkin_baseline" => c.lyapunov.steps = 10_000,
        "toy_chaos_sweep" => c.lyapunov.steps = 50_000,
        _ => {}
    }
    Ok(c)
}

/// A fully resolved, immutable scenario description.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub config: RunConfig,
    pub params: ScenarioParams,
}

pub fn build(name: &str) -> Result<Scenario> {
    Scenario::from_config(default_config(name)?)
}

impl Scenario {
    pub fn from_config(config: RunConfig) -> Result<Self> {
        let name = config.scenario.name.clone();
        let params = ScenarioParams::from_table(&name, &config.scenario.params)?;
        let known = default_thresholds(&name);
        for key in config.scenario.thresholds.keys() {
            if !known.contains_key(key) {
                return Err(Error::ConfigValidation {
                    key: format!("scenario.thresholds.{key}"),
                    message: "unknown threshold".into(),
                });
            }
        }
        Ok(Self { config, params })
    }

    pub fn name(&self) -> &str {
        &self.config.scenario.name
    }

    pub fn config_hash(&self) -> String {
        self.config.hash()
    }

    pub fn threshold(&self, key: &str) -> f64 {
        self.config
            .scenario
            .thresholds
            .get(key)
            .copied()
            .or_else(|| default_thresholds(self.name()).get(key).copied())
            .unwrap_or_else(|| panic!("threshold `{key}` missing from the catalog of {}", self.name()))
    }

    pub fn evolver_config(&self) -> Result<EvolverConfig> {
        let e = &self.config.evolver;
        EvolverConfig::new(e.dt, e.scheme, e.record_stride)
    }

    pub fn trajectory_options(&self) -> TrajectoryOptions {
        let t = &self.config.trajectory;
        TrajectoryOptions {
            dt: (t.dt > 0.0).then_some(t.dt),
            speed_clamp_factor: t.speed_clamp_factor,
            eps_node_rel: self.config.evolver.eps_node_rel,
            check_stride: t.check_stride,
            ..TrajectoryOptions::default()
        }
    }

    /// Executes every wired check. Numerical failures become failed entries.
    pub fn run_acceptance(&self) -> AcceptanceReport {
        checks::run(self)
    }

    /// Evolves the scenario's primary state when it has one on a grid.
    pub fn primary_evolution(&self) -> Result<(crate::dynamics::EvolutionRecord, ParticleSystem)> {
        checks::primary_evolution(self)
    }
}

pub(crate) fn line_grid(points: usize, lower: f64, upper: f64) -> Result<Arc<SpatialGrid>> {
    Ok(Arc::new(SpatialGrid::cube(1, points, lower, upper, Boundary::Periodic)?))
}

pub(crate) fn oscillator_system(mass: f64, omega: f64, hbar: f64) -> Result<ParticleSystem> {
    ParticleSystem::single(mass, 1, hbar, Potential::harmonic(vec![mass * omega * omega], vec![0.0]))
}

/// Runs `f` over `items` on up to `workers` threads, keeping input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_builds_and_is_deterministic() {
        for name in catalog_names() {
            let a = build(name).unwrap();
            let b = build(name).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.config_hash(), b.config_hash());
        }
        assert!(matches!(build("unknown"), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn every_criterion_is_covered() {
        for c in 1..=9u8 {
            assert!(CATALOG.iter().any(|e| e.1.contains(&c)), "criterion {c}");
        }
    }

    #[test]
    fn parallel_map_keeps_order() {
        let v: Vec<usize> = (0..37).collect();
        assert_eq!(parallel_map(&v, 4, |x| x * 2), v.iter().map(|x| x * 2).collect::<Vec<_>>());
    }
}

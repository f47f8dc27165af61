//! Soft parameters of each catalog entry. Every field has a catalog default
//! and can be overridden under `scenario.params.*`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn invalid(key: &str, message: impl Into<String>) -> Error {
    Error::ConfigValidation {
        key: format!("scenario.params.{key}"),
        message: message.into(),
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive and finite, got {v}")))
    }
}

fn check_line(points: usize, lower: f64, upper: f64) -> Result<()> {
    if points < 8 {
        return Err(invalid("points", format!("need at least 8 points, got {points}")));
    }
    if !(lower.is_finite() && upper.is_finite() && lower < upper) {
        return Err(invalid("upper", format!("need lower < upper, got [{lower}, {upper}]")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeGaussianParams {
    pub points: usize,
    pub lower: f64,
    pub upper: f64,
    pub mass: f64,
    pub hbar: f64,
    pub x0: f64,
    pub sigma: f64,
    pub k0: f64,
    /// Times at which the ensemble force is measured.
    pub check_times: Vec<f64>,
    /// Seeds of the starting points drawn from |ψ₀|².
    pub trajectory_seeds: Vec<u64>,
}

impl Default for FreeGaussianParams {
    fn default() -> Self {
        Self {
            points: 512,
            lower: -20.0,
            upper: 20.0,
            mass: 1.0,
            hbar: 1.0,
            x0: 0.0,
            sigma: 1.0,
            k0: 0.0,
            check_times: vec![0.0, 0.5, 1.0],
            trajectory_seeds: vec![0, 1, 2, 3, 4],
        }
    }
}

impl FreeGaussianParams {
    pub fn validate(&self) -> Result<()> {
        check_line(self.points, self.lower, self.upper)?;
        positive("mass", self.mass)?;
        positive("hbar", self.hbar)?;
        positive("sigma", self.sigma)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorParams {
    pub points: usize,
    pub lower: f64,
    pub upper: f64,
    pub mass: f64,
    pub omega: f64,
    pub hbar: f64,
    /// Interior = points with R ≥ interior_rel·max R.
    pub interior_rel: f64,
    pub trajectory_starts: Vec<f64>,
}

impl Default for OscillatorParams {
    fn default() -> Self {
        Self {
            points: 512,
            lower: -20.0,
            upper: 20.0,
            mass: 1.0,
            omega: 1.0,
            hbar: 1.0,
            interior_rel: 1e-3,
            trajectory_starts: vec![-1.3, 0.0, 0.7, 2.2],
        }
    }
}

impl OscillatorParams {
    pub fn validate(&self) -> Result<()> {
        check_line(self.points, self.lower, self.upper)?;
        positive("mass", self.mass)?;
        positive("omega", self.omega)?;
        positive("hbar", self.hbar)?;
        if !(self.interior_rel > 0.0 && self.interior_rel < 1.0) {
            return Err(invalid("interior_rel", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherentParams {
    pub points: usize,
    pub lower: f64,
    pub upper: f64,
    pub mass: f64,
    pub omega: f64,
    pub hbar: f64,
    /// Initial displacement and momentum of the packet centre.
    pub x0: f64,
    pub p0: f64,
    pub check_times: Vec<f64>,
    pub trajectory_starts: Vec<f64>,
}

impl Default for CoherentParams {
    fn default() -> Self {
        Self {
            points: 512,
            lower: -20.0,
            upper: 20.0,
            mass: 1.0,
            omega: 1.0,
            hbar: 1.0,
            x0: 1.5,
            p0: 0.0,
            check_times: vec![0.0, 0.5, 1.0],
            trajectory_starts: vec![0.5, 1.5, 2.5],
        }
    }
}

impl CoherentParams {
    pub fn validate(&self) -> Result<()> {
        check_line(self.points, self.lower, self.upper)?;
        positive("mass", self.mass)?;
        positive("omega", self.omega)?;
        positive("hbar", self.hbar)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HydrogenParams {
    pub points: usize,
    /// Outer radius in Bohr radii.
    pub r_max: f64,
    /// Reduced mass μ.
    pub mass: f64,
    pub hbar: f64,
    /// Coulomb strength e² in V(r) = −e²/r.
    pub coulomb: f64,
    /// Balance window, in Bohr radii.
    pub window_min: f64,
    pub window_max: f64,
}

impl Default for HydrogenParams {
    fn default() -> Self {
        Self {
            points: 2048,
            r_max: 40.0,
            mass: 1.0,
            hbar: 1.0,
            coulomb: 1.0,
            window_min: 2.0,
            window_max: 20.0,
        }
    }
}

impl HydrogenParams {
    pub fn bohr_radius(&self) -> f64 {
        self.hbar * self.hbar / (self.mass * self.coulomb)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 16 {
            return Err(invalid("points", "need at least 16 radial points"));
        }
        positive("r_max", self.r_max)?;
        positive("mass", self.mass)?;
        positive("hbar", self.hbar)?;
        positive("coulomb", self.coulomb)?;
        if !(self.window_min > 0.0 && self.window_min < self.window_max && self.window_max < self.r_max) {
            return Err(invalid("window_max", "need 0 < window_min < window_max < r_max"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneWavePairParams {
    /// Points per axis on [−half_length, half_length]².
    pub points: usize,
    pub half_length: f64,
    pub mass: f64,
    pub hbar: f64,
    /// Centre-of-mass wave number in units of 2π/(2·half_length).
    pub mode: i64,
    /// Width w of the relative factor exp(−u²/(4w²)).
    pub relative_width: f64,
}

impl Default for PlaneWavePairParams {
    fn default() -> Self {
        Self {
            points: 128,
            half_length: 10.0,
            mass: 1.0,
            hbar: 1.0,
            mode: 1,
            relative_width: 2.0,
        }
    }
}

impl PlaneWavePairParams {
    pub fn validate(&self) -> Result<()> {
        check_line(self.points, -self.half_length, self.half_length)?;
        positive("mass", self.mass)?;
        positive("hbar", self.hbar)?;
        positive("relative_width", self.relative_width)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergencePairParams {
    pub points: usize,
    pub lower: f64,
    pub upper: f64,
    pub mass: f64,
    pub hbar: f64,
    pub sigma: f64,
    /// Phase curvature; negative focuses the packets.
    pub chirp: f64,
    /// Translation between the two packets.
    pub delta: f64,
    pub clamp: f64,
    /// Bound on the per-state norm drift; D must move by 10× this.
    pub norm_bound: f64,
}

impl Default for DivergencePairParams {
    fn default() -> Self {
        Self {
            points: 512,
            lower: -20.0,
            upper: 20.0,
            mass: 1.0,
            hbar: 1.0,
            sigma: 1.0,
            chirp: -0.2,
            delta: 0.5,
            clamp: 1e6,
            norm_bound: 1e-6,
        }
    }
}

impl DivergencePairParams {
    pub fn validate(&self) -> Result<()> {
        check_line(self.points, self.lower, self.upper)?;
        positive("mass", self.mass)?;
        positive("hbar", self.hbar)?;
        positive("sigma", self.sigma)?;
        positive("clamp", self.clamp)?;
        positive("norm_bound", self.norm_bound)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HermiticityParams {
    pub points: usize,
    pub lower: f64,
    pub upper: f64,
    pub mass: f64,
    pub omega: f64,
    pub hbar: f64,
    /// Coherent state (x0, p0) paired with the ground state.
    pub x0: f64,
    pub p0: f64,
}

impl Default for HermiticityParams {
    fn default() -> Self {
        Self {
            points: 512,
            lower: -20.0,
            upper: 20.0,
            mass: 1.0,
            omega: 1.0,
            hbar: 1.0,
            x0: 1.0,
            p0: 1.0,
        }
    }
}

impl HermiticityParams {
    pub fn validate(&self) -> Result<()> {
        check_line(self.points, self.lower, self.upper)?;
        positive("mass", self.mass)?;
        positive("omega", self.omega)?;
        positive("hbar", self.hbar)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalerkinParams {
    pub points: usize,
    pub lower: f64,
    pub upper: f64,
    /// Size of the oscillator basis.
    pub basis_size: usize,
    pub plane_wave_modes: Vec<i64>,
    /// Toy generator frozen at its initial state.
    pub toy_energies: Vec<f64>,
    pub toy_coupling: f64,
    pub diagonal_rates: Vec<f64>,
}

impl Default for GalerkinParams {
    fn default() -> Self {
        Self {
            points: 512,
            lower: -20.0,
            upper: 20.0,
            basis_size: 8,
            plane_wave_modes: vec![-4, -3, -2, -1, 0, 1, 2, 3],
            toy_energies: vec![0.0, 1.0, 2.3, 3.7],
            toy_coupling: 1.0,
            diagonal_rates: vec![0.5, 0.1, -0.2, -1.0],
        }
    }
}

impl GalerkinParams {
    pub fn validate(&self) -> Result<()> {
        check_line(self.points, self.lower, self.upper)?;
        if self.basis_size < 2 {
            return Err(invalid("basis_size", "need at least 2 basis functions"));
        }
        if self.plane_wave_modes.len() < 2 {
            return Err(invalid("plane_wave_modes", "need at least 2 modes"));
        }
        if self.toy_energies.len() < 3 {
            return Err(invalid("toy_energies", "the toy generator needs N ≥ 3"));
        }
        if self.diagonal_rates.is_empty() {
            return Err(invalid("diagonal_rates", "need at least one rate"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToySweepParams {
    pub energies: Vec<f64>,
    pub couplings: Vec<f64>,
    /// Initial coefficients (normalized before use); empty draws them from
    /// the run seed.
    pub a0_re: Vec<f64>,
    pub a0_im: Vec<f64>,
    /// Estimates below this are indistinguishable from zero at the default
    /// averaging time.
    pub zero_floor: f64,
}

impl Default for ToySweepParams {
    fn default() -> Self {
        Self {
            energies: vec![0.0, 1.0, 2.3, 3.7],
            couplings: vec![0.0, 1.0, 2.0, 4.0, 8.0],
            a0_re: vec![0.6, 0.4, 0.3, 0.2],
            a0_im: vec![0.0, 0.3, -0.2, 0.45],
            zero_floor: 0.01,
        }
    }
}

impl ToySweepParams {
    pub fn validate(&self) -> Result<()> {
        let n = self.energies.len();
        if n < 3 {
            return Err(invalid("energies", format!("the toy generator needs N ≥ 3, got {n}")));
        }
        if self.couplings.is_empty() {
            return Err(invalid("couplings", "need at least one coupling"));
        }
        if self.a0_re.len() != self.a0_im.len() || !(self.a0_re.is_empty() || self.a0_re.len() == n) {
            return Err(invalid("a0_re", format!("need {n} real and imaginary parts (or none)")));
        }
        positive("zero_floor", self.zero_floor)
    }
}

use num_complex::Complex64;

use crate::field::ComplexField;
use crate::io::{fmt_f64, CsvBuilder};

/// Scalar diagnostics of one time step (step 0 is the initial state).
#[derive(Clone, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub norm: f64,
    /// ⟨H⟩ of the linear Hamiltonian.
    pub energy: f64,
    /// Fraction of node-masked points seen by the nonlinear term (0 for the
    /// unitary flow).
    pub mask_fraction: f64,
    /// ∫|ψ−φ|²dτ when evolved as a pair.
    pub divergence: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct EvolutionRecord {
    pub dt: f64,
    pub record_stride: usize,
    pub times: Vec<f64>,
    pub snapshots: Vec<ComplexField>,
    /// Norm of each snapshot.
    pub norms: Vec<f64>,
    pub steps: Vec<StepDiagnostics>,
    pub warnings: Vec<String>,
}

impl EvolutionRecord {
    /// Record built from externally computed snapshots spaced `dt·stride`
    /// apart (for instance an analytic solution). Diagnostics carry the
    /// snapshot norms; energies are left at zero.
    pub fn from_snapshots(dt: f64, record_stride: usize, snapshots: Vec<ComplexField>) -> Self {
        let norms: Vec<f64> = snapshots.iter().map(crate::field::norm).collect();
        let times: Vec<f64> = (0..snapshots.len()).map(|i| (i * record_stride) as f64 * dt).collect();
        let steps = times
            .iter()
            .zip(&norms)
            .enumerate()
            .map(|(i, (&t, &norm))| StepDiagnostics {
                step: i * record_stride,
                t,
                norm,
                energy: 0.0,
                mask_fraction: 0.0,
                divergence: None,
            })
            .collect();
        Self {
            dt,
            record_stride,
            times,
            snapshots,
            norms,
            steps,
            warnings: Vec::new(),
        }
    }

    /// Time between consecutive snapshots.
    pub fn snapshot_interval(&self) -> f64 {
        self.dt * self.record_stride as f64
    }

    pub fn final_state(&self) -> &ComplexField {
        self.snapshots.last().expect("record always holds the initial snapshot")
    }

    /// max_t |‖ψ(t)‖ − ‖ψ(0)‖| over every step.
    pub fn norm_drift(&self) -> f64 {
        let n0 = self.steps[0].norm;
        self.steps.iter().map(|s| (s.norm - n0).abs()).fold(0.0, f64::max)
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.steps[0].energy;
        self.steps.iter().map(|s| (s.energy - e0).abs()).fold(0.0, f64::max)
    }

    /// Step index of snapshot `i`.
    pub fn snapshot_step(&self, i: usize) -> usize {
        i * self.record_stride
    }

    /// Time series as CSV: step, t, norm, energy, and divergence when paired.
    pub fn to_csv(&self, config_hash: &str) -> String {
        let paired = self.steps.iter().any(|s| s.divergence.is_some());
        let mut header = vec!["step", "t", "norm", "energy"];
        if paired {
            header.push("divergence");
        }
        let mut csv = CsvBuilder::new("timeseries", config_hash, &header);
        for s in &self.steps {
            let mut row = vec![s.step.to_string(), fmt_f64(s.t), fmt_f64(s.norm), fmt_f64(s.energy)];
            if paired {
                row.push(s.divergence.map(fmt_f64).unwrap_or_default());
            }
            csv.row(&row);
        }
        csv.finish()
    }
}

/// Two states evolved in lockstep under the same flow.
#[derive(Clone, Debug)]
pub struct PairRecord {
    pub psi: EvolutionRecord,
    pub phi: EvolutionRecord,
    /// D(t) = ∫|ψ−φ|²dτ per step.
    pub divergence: Vec<f64>,
    /// ⟨φ|ψ⟩ per step.
    pub overlap: Vec<Complex64>,
}

impl PairRecord {
    pub fn times(&self) -> Vec<f64> {
        self.psi.steps.iter().map(|s| s.t).collect()
    }

    /// max_t |D(t) − D(0)|.
    pub fn divergence_change(&self) -> f64 {
        let d0 = self.divergence[0];
        self.divergence.iter().map(|d| (d - d0).abs()).fold(0.0, f64::max)
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.psi.norm_drift().max(self.phi.norm_drift())
    }

    /// Central-difference d/dt ⟨φ|ψ⟩ at interior steps (one-sided at the ends).
    pub fn overlap_rate(&self) -> Vec<Complex64> {
        let dt = self.psi.dt;
        let n = self.overlap.len();
        if n < 2 {
            return vec![Complex64::default(); n];
        }
        (0..n)
            .map(|i| {
                if i == 0 {
                    (self.overlap[1] - self.overlap[0]) / dt
                } else if i + 1 == n {
                    (self.overlap[n - 1] - self.overlap[n - 2]) / dt
                } else {
                    (self.overlap[i + 1] - self.overlap[i - 1]) / (2.0 * dt)
                }
            })
            .collect()
    }

    pub fn to_csv(&self, config_hash: &str) -> String {
        let rate = self.overlap_rate();
        let mut csv = CsvBuilder::new(
            "pair-timeseries",
            config_hash,
            &[
                "step",
                "t",
                "norm_psi",
                "norm_phi",
                "energy_psi",
                "energy_phi",
                "divergence",
                "overlap_re",
                "overlap_im",
                "overlap_rate_re",
                "overlap_rate_im",
            ],
        );
        for (i, (a, b)) in self.psi.steps.iter().zip(&self.phi.steps).enumerate() {
            csv.row(&[
                a.step.to_string(),
                fmt_f64(a.t),
                fmt_f64(a.norm),
                fmt_f64(b.norm),
                fmt_f64(a.energy),
                fmt_f64(b.energy),
                fmt_f64(self.divergence[i]),
                fmt_f64(self.overlap[i].re),
                fmt_f64(self.overlap[i].im),
                fmt_f64(rate[i].re),
                fmt_f64(rate[i].im),
            ]);
        }
        csv.finish()
    }
}

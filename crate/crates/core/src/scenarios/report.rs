use std::fmt::Write as _;

use crate::field::{ComplexField, RealField};
use crate::io::{fmt_f64, CsvBuilder};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// Passes when measured < threshold.
    Below,
    /// Passes when measured > threshold.
    Above,
    /// Informational; always passes.
    Report,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Below => "<",
            Relation::Above => ">",
            Relation::Report => "report",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    /// Acceptance criterion number; `None` for supplementary checks.
    pub criterion: Option<u8>,
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn new(criterion: Option<u8>, name: impl Into<String>, measured: f64, relation: Relation, threshold: f64) -> Self {
        let pass = match relation {
            Relation::Below => measured < threshold,
            Relation::Above => measured > threshold,
            Relation::Report => true,
        };
        Self {
            criterion,
            name: name.into(),
            measured,
            threshold,
            relation,
            pass,
        }
    }

    pub fn line(&self, scenario: &str) -> String {
        let crit = self.criterion.map(|c| format!("criterion {c}")).unwrap_or_else(|| "supplementary".into());
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        match self.relation {
            Relation::Report => format!("[INFO] {crit} {scenario}/{}: {:e}", self.name, self.measured),
            r => format!(
                "[{verdict}] {crit} {scenario}/{}: {:e} {} {:e}",
                self.name,
                self.measured,
                r.symbol(),
                self.threshold
            ),
        }
    }
}

/// Payload of an output file produced by a scenario.
#[derive(Clone, Debug)]
pub enum ArtifactData {
    Csv(String),
    Complex {
        field: ComplexField,
        name: String,
        time: f64,
        hbar: f64,
    },
    Real {
        field: RealField,
        name: String,
        time: f64,
        hbar: f64,
    },
}

#[derive(Clone, Debug)]
pub struct Artifact {
    /// Path relative to the scenario's output directory.
    pub file: String,
    pub data: ArtifactData,
}

impl Artifact {
    pub fn csv(file: impl Into<String>, text: String) -> Self {
        Self {
            file: file.into(),
            data: ArtifactData::Csv(text),
        }
    }

    pub fn complex(file: impl Into<String>, field: &ComplexField, time: f64, hbar: f64) -> Self {
        let file = file.into();
        Self {
            data: ArtifactData::Complex {
                field: field.clone(),
                name: file.trim_end_matches(".cfield").to_string(),
                time,
                hbar,
            },
            file,
        }
    }

    pub fn real(file: impl Into<String>, field: &RealField, time: f64, hbar: f64) -> Self {
        let file = file.into();
        Self {
            data: ArtifactData::Real {
                field: field.clone(),
                name: file.trim_end_matches(".rfield").to_string(),
                time,
                hbar,
            },
            file,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AcceptanceReport {
    pub scenario: String,
    pub config_hash: String,
    pub checks: Vec<Check>,
    pub artifacts: Vec<Artifact>,
}

pub const CSV_HEADER: [&str; 7] = ["scenario", "criterion", "check", "measured", "threshold", "relation", "pass"];

impl AcceptanceReport {
    pub fn new(scenario: &str, config_hash: &str) -> Self {
        Self {
            scenario: scenario.into(),
            config_hash: config_hash.into(),
            checks: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn check(&mut self, criterion: Option<u8>, name: &str, measured: f64, relation: Relation, threshold: f64) {
        self.push(Check::new(criterion, name, measured, relation, threshold));
    }

    /// A failure raised by the numerics becomes a failed entry rather than an
    /// error.
    pub fn failure(&mut self, criterion: Option<u8>, name: &str, message: &str) {
        log::error!("{}/{name}: {message}", self.scenario);
        self.push(Check {
            criterion,
            name: format!("{name} (error: {})", message.replace(',', ";")),
            measured: f64::NAN,
            threshold: f64::NAN,
            relation: Relation::Below,
            pass: false,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn csv_rows(&self, csv: &mut CsvBuilder) {
        for c in &self.checks {
            csv.row(&[
                self.scenario.clone(),
                c.criterion.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
                c.name.clone(),
                fmt_f64(c.measured),
                fmt_f64(c.threshold),
                c.relation.symbol().into(),
                c.pass.to_string(),
            ]);
        }
    }

    pub fn to_csv(&self) -> String {
        let mut csv = CsvBuilder::new("acceptance", &self.config_hash, &CSV_HEADER);
        self.csv_rows(&mut csv);
        csv.finish()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario {} (config {})", self.scenario, self.config_hash);
        for c in &self.checks {
            let _ = writeln!(s, "  {}", c.line(&self.scenario));
        }
        let _ = writeln!(s, "  => {}", if self.passed() { "all checks pass" } else { "FAILED" });
        s
    }
}

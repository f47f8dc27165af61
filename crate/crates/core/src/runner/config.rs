//! Run configuration: TOML with dotted keys, layered as catalog defaults →
//! file → `--override key=value`, validated before any compute.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::dynamics::Scheme;
use crate::error::{Error, Result};
use crate::flow::LyapunovOptions;
use crate::io::FORMAT_VERSION;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: String,
    /// Seed for every randomized choice (trajectory starts, random a0).
    pub seed: u64,
    /// Empty means `$BOHMFLOW_OUT`, then `bohmflow-out`.
    pub output_dir: String,
    pub workers: usize,
    pub scenario: ScenarioSection,
    pub evolver: EvolverSection,
    pub trajectory: TrajectorySection,
    pub lyapunov: LyapunovOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub params: Table,
    pub thresholds: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolverSection {
    pub dt: f64,
    pub scheme: Scheme,
    pub steps: usize,
    pub record_stride: usize,
    /// Node threshold relative to max|ψ|.
    pub eps_node_rel: f64,
}

impl Default for EvolverSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            scheme: Scheme::SplitStepFourier,
            steps: 1000,
            record_stride: 10,
            eps_node_rel: crate::field::DEFAULT_NODE_REL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    /// Explicit starting configurations; when empty, `samples` starts are
    /// drawn from |ψ₀|².
    pub starts: Vec<Vec<f64>>,
    pub samples: usize,
    /// RK4 step; 0 uses the snapshot interval.
    pub dt: f64,
    pub speed_clamp_factor: f64,
    pub check_stride: bool,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        Self {
            starts: Vec::new(),
            samples: 8,
            dt: 0.0,
            speed_clamp_factor: 10.0,
            check_stride: true,
        }
    }
}

impl RunConfig {
    /// Bare defaults around a scenario section; the catalog fills in the rest.
    pub fn skeleton(scenario: ScenarioSection) -> Self {
        Self {
            format_version: FORMAT_VERSION.into(),
            seed: 0,
            output_dir: String::new(),
            workers: 1,
            scenario,
            evolver: EvolverSection::default(),
            trajectory: TrajectorySection::default(),
            lyapunov: LyapunovOptions::default(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs always serialize")
    }

    /// Hash of everything that influences results (not the output location
    /// or worker count).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir.clear();
        c.workers = 1;
        let digest = Sha256::digest(c.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Structural checks that do not depend on the scenario kind.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| Error::ConfigValidation {
            key: key.into(),
            message,
        };
        // TOML integers are signed 64-bit
        if self.seed > i64::MAX as u64 {
            return Err(bad("seed", format!("must not exceed {}", i64::MAX)));
        }
        if self.format_version != FORMAT_VERSION {
            return Err(bad(
                "format_version",
                format!("unsupported version `{}`, expected `{FORMAT_VERSION}`", self.format_version),
            ));
        }
        if self.workers == 0 {
            return Err(bad("workers", "must be at least 1".into()));
        }
        let e = &self.evolver;
        if !(e.dt > 0.0 && e.dt.is_finite()) {
            return Err(bad("evolver.dt", format!("must be positive and finite, got {}", e.dt)));
        }
        if e.steps == 0 {
            return Err(bad("evolver.steps", "must be at least 1".into()));
        }
        if e.record_stride == 0 {
            return Err(bad("evolver.record_stride", "must be at least 1".into()));
        }
        if !(e.eps_node_rel > 0.0 && e.eps_node_rel < 1.0) {
            return Err(bad("evolver.eps_node_rel", format!("must lie in (0, 1), got {}", e.eps_node_rel)));
        }
        let t = &self.trajectory;
        if !(t.dt >= 0.0 && t.dt.is_finite()) {
            return Err(bad("trajectory.dt", format!("must be ≥ 0 (0 = snapshot interval), got {}", t.dt)));
        }
        if !(t.speed_clamp_factor >= 1.0) {
            return Err(bad("trajectory.speed_clamp_factor", format!("must be ≥ 1, got {}", t.speed_clamp_factor)));
        }
        let l = &self.lyapunov;
        if !(l.dt > 0.0 && l.dt.is_finite()) {
            return Err(bad("lyapunov.dt", format!("must be positive and finite, got {}", l.dt)));
        }
        if l.renorm_stride == 0 {
            return Err(bad("lyapunov.renorm_stride", "must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&l.transient_fraction) {
            return Err(bad("lyapunov.transient_fraction", format!("must lie in [0, 1), got {}", l.transient_fraction)));
        }
        l.validate().map_err(|e| bad("lyapunov.steps", e.to_string()))?;
        for (k, v) in &self.scenario.thresholds {
            if !v.is_finite() {
                return Err(bad(&format!("scenario.thresholds.{k}"), "must be finite".into()));
            }
        }
        Ok(())
    }
}

/// How a configuration document is layered onto the catalog.
#[derive(Clone, Debug)]
pub struct LoadOptions {
    /// `key=value` pairs applied after the file.
    pub overrides: Vec<String>,
    /// Unknown keys are errors when true, warnings when false.
    pub strict: bool,
    /// Scenario used when neither the file nor an override names one.
    pub default_scenario: String,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            overrides: Vec::new(),
            strict: true,
            default_scenario: "free_gaussian".into(),
        }
    }
}

/// A loaded configuration plus the non-fatal findings of lenient mode.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    Ok(load_config_with(path, &LoadOptions::default())?.config)
}

pub fn load_config_with(path: &Path, opts: &LoadOptions) -> Result<Loaded> {
    if !path.is_file() {
        return Err(Error::ConfigNotFound(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_config_str(&text, opts)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map(|p| before.len() - p).unwrap_or(before.len() + 1);
    (line, column)
}

pub fn parse_table(text: &str) -> Result<Table> {
    text.parse::<Table>().map_err(|e| {
        let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((1, 1));
        Error::ConfigParse {
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

/// Splits `a.b.c=value`; the value is read as a TOML literal, falling back
/// to a bare string.
pub fn parse_override(spec: &str) -> Result<(Vec<String>, Value)> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| Error::ConfigValidation {
        key: spec.into(),
        message: "override must look like key=value".into(),
    })?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(|p| p.trim().is_empty()) {
        return Err(Error::ConfigValidation {
            key: key.into(),
            message: "empty key segment".into(),
        });
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((key.split('.').map(|s| s.trim().to_string()).collect(), value))
}

fn nest(path: &[String], value: Value) -> Table {
    let mut t = Table::new();
    if path.len() == 1 {
        t.insert(path[0].clone(), value);
    } else {
        t.insert(path[0].clone(), Value::Table(nest(&path[1..], value)));
    }
    t
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

/// Checks `got` against the default's type and widens integers where a
/// float is expected.
fn coerce(expected: &Value, got: &Value, key: &str) -> Result<Value> {
    match (expected, got) {
        (Value::Float(_), Value::Integer(i)) => return Ok(Value::Float(*i as f64)),
        (Value::Array(e), Value::Array(g)) => {
            return match e.first() {
                Some(ex) => g
                    .iter()
                    .enumerate()
                    .map(|(i, item)| coerce(ex, item, &format!("{key}[{i}]")))
                    .collect::<Result<Vec<_>>>()
                    .map(Value::Array),
                None => Ok(got.clone()),
            }
        }
        (a, b) if std::mem::discriminant(a) == std::mem::discriminant(b) => return Ok(got.clone()),
        _ => {}
    }
    Err(Error::ConfigValidation {
        key: key.into(),
        message: format!("expected {}, found {}", type_name(expected), type_name(got)),
    })
}

/// Overlays `user` on `base`. Every key must already exist in `base` with a
/// compatible type.
pub fn merge_table(base: &mut Table, user: &Table, prefix: &str, strict: bool, warnings: &mut Vec<String>) -> Result<()> {
    for (k, v) in user {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match base.get_mut(k) {
            None => {
                if strict {
                    return Err(Error::ConfigValidation {
                        key,
                        message: "unknown key".into(),
                    });
                }
                warnings.push(format!("ignored unknown key `{key}`"));
            }
            Some(Value::Table(b)) => match v {
                Value::Table(u) => merge_table(b, u, &key, strict, warnings)?,
                other => {
                    return Err(Error::ConfigValidation {
                        key,
                        message: format!("expected table, found {}", type_name(other)),
                    })
                }
            },
            Some(b) => {
                *b = coerce(b, v, &key)?;
            }
        }
    }
    Ok(())
}

fn as_table(config: &RunConfig) -> Table {
    Table::try_from(config).expect("run configs always serialize")
}

fn scenario_name(file: &Table, overrides: &[(Vec<String>, Value)], default: &str) -> Result<String> {
    for (path, v) in overrides.iter().rev() {
        if path.len() == 2 && path[0] == "scenario" && path[1] == "name" {
            return match v {
                Value::String(s) => Ok(s.clone()),
                other => Err(Error::ConfigValidation {
                    key: "scenario.name".into(),
                    message: format!("expected string, found {}", type_name(other)),
                }),
            };
        }
    }
    match file.get("scenario").and_then(|s| s.as_table()).and_then(|s| s.get("name")) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Err(Error::ConfigValidation {
            key: "scenario.name".into(),
            message: format!("expected string, found {}", type_name(other)),
        }),
        None => Ok(default.to_string()),
    }
}

pub fn load_config_str(text: &str, opts: &LoadOptions) -> Result<Loaded> {
    let file = parse_table(text)?;
    let overrides = opts
        .overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>>>()?;
    let name = scenario_name(&file, &overrides, &opts.default_scenario)?;
    let defaults = crate::scenarios::default_config(&name)?;
    let mut merged = as_table(&defaults);
    let mut warnings = Vec::new();
    merge_table(&mut merged, &file, "", opts.strict, &mut warnings)?;
    for (path, v) in overrides {
        merge_table(&mut merged, &nest(&path, v), "", opts.strict, &mut warnings)?;
    }
    let config: RunConfig = Value::Table(merged).try_into().map_err(|e: toml::de::Error| Error::ConfigValidation {
        key: "<document>".into(),
        message: e.message().to_string(),
    })?;
    config.validate()?;
    crate::scenarios::Scenario::from_config(config.clone())?;
    Ok(Loaded { config, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<RunConfig> {
        Ok(load_config_str(text, &LoadOptions::default())?.config)
    }

    #[test]
    fn empty_document_gives_catalog_defaults() {
        let c = load("").unwrap();
        assert_eq!(c, crate::scenarios::default_config("free_gaussian").unwrap());
    }

    #[test]
    fn non_positive_dt_names_the_key() {
        let err = load("[evolver]\ndt = 0.0\n").unwrap_err();
        match err {
            Error::ConfigValidation { key, .. } => assert_eq!(key, "evolver.dt"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = load("seed = 1\n[evolver\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 2, .. }), "{err}");
    }

    #[test]
    fn unknown_keys_strict_and_lenient() {
        let err = load("[evolver]\ndtt = 1.0\n").unwrap_err();
        assert!(matches!(err, Error::ConfigValidation { ref key, .. } if key == "evolver.dtt"));
        let opts = LoadOptions {
            strict: false,
            ..LoadOptions::default()
        };
        let l = load_config_str("[evolver]\ndtt = 1.0\n", &opts).unwrap();
        assert_eq!(l.warnings.len(), 1);
    }

    #[test]
    fn type_mismatch_and_params_paths() {
        let err = load("[evolver]\nsteps = \"many\"\n").unwrap_err();
        assert!(matches!(err, Error::ConfigValidation { ref key, .. } if key == "evolver.steps"));
        let err = load("[scenario.params]\nsigma = -1.0\n").unwrap_err();
        assert!(matches!(err, Error::ConfigValidation { ref key, .. } if key == "scenario.params.sigma"), "{err}");
        let err = load("[scenario.params]\nwidth = 1.0\n").unwrap_err();
        assert!(matches!(err, Error::ConfigValidation { ref key, .. } if key == "scenario.params.width"));
    }

    #[test]
    fn overrides_win_and_integers_widen() {
        let opts = LoadOptions {
            overrides: vec!["evolver.dt=2e-3".into(), "scenario.params.sigma=2".into(), "seed=7".into()],
            ..LoadOptions::default()
        };
        let c = load_config_str("[evolver]\ndt = 5e-3\n", &opts).unwrap().config;
        assert_eq!(c.evolver.dt, 2e-3);
        assert_eq!(c.seed, 7);
        assert_eq!(c.scenario.params["sigma"].as_float(), Some(2.0));
        let name = LoadOptions {
            overrides: vec!["scenario.name=ho_ground".into()],
            ..LoadOptions::default()
        };
        assert_eq!(load_config_str("", &name).unwrap().config.scenario.name, "ho_ground");
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        assert!(matches!(load("[scenario]\nname = \"nope\"\n"), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn missing_file() {
        let err = load_config(Path::new("/nonexistent/missing.cfg")).unwrap_err();
        assert!(err.to_string().contains("config not found"));
    }
}

//! Orchestration: resolves configurations, runs scenarios, flows and
//! trajectory batches, and persists every output atomically.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::dump::{self, Dump, DumpMeta};
use crate::field::{norm, ComplexField};
use crate::io::atomic_write;
use crate::scenarios::report::{AcceptanceReport, ArtifactData, Check, Relation, CSV_HEADER};
use crate::scenarios::{self, catalog_names, parallel_map, Scenario, ScenarioParams};
use config::{load_config_str, load_config_with, LoadOptions, RunConfig};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "BOHMFLOW_OUT";
const FALLBACK_OUT: &str = "bohmflow-out";

/// Tolerance on the norm of a re-read field dump.
pub const ROUNDTRIP_TOLERANCE: f64 = 1e-12;

/// Settings shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct GlobalOptions {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub overrides: Vec<String>,
    /// `false` selects lenient parsing.
    pub lenient: bool,
}

#[derive(Clone, Debug)]
pub enum Command {
    Run { config: Option<PathBuf> },
    Accept { target: String },
    Lyapunov { config: Option<PathBuf> },
    Traj { config: Option<PathBuf> },
    Inspect { file: PathBuf },
}

/// What a successful invocation produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    /// Text for the standard output stream.
    pub summary: String,
    pub out_dir: Option<PathBuf>,
    /// False when an acceptance check failed.
    pub passed: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// One machine-readable diagnostic line.
pub fn error_line(e: &Error) -> String {
    let mut line = format!("error kind={} exit={}", e.kind(), e.exit_code());
    match e {
        Error::ConfigValidation { key, .. } => {
            let _ = write!(line, " key={key}");
        }
        Error::ConfigParse { line: l, column, .. } => {
            let _ = write!(line, " line={l} column={column}");
        }
        Error::NonFinite { step, .. } | Error::TangentCollapse { step, .. } => {
            let _ = write!(line, " step={step}");
        }
        _ => {}
    }
    let _ = write!(line, " message={:?}", e.to_string());
    line
}

pub fn execute(cmd: &Command, opts: &GlobalOptions) -> Result<Outcome> {
    match cmd {
        Command::Run { config } => run(&resolve(config.as_ref(), opts)?, opts),
        Command::Accept { target } => accept(target, opts),
        Command::Lyapunov { config } => lyapunov(&resolve(config.as_ref(), opts)?, opts),
        Command::Traj { config } => traj(&resolve(config.as_ref(), opts)?, opts),
        Command::Inspect { file } => Ok(Outcome {
            summary: inspect(file)?,
            out_dir: None,
            passed: true,
        }),
    }
}

fn load_options(opts: &GlobalOptions, default_scenario: &str) -> LoadOptions {
    LoadOptions {
        overrides: opts.overrides.clone(),
        strict: !opts.lenient,
        default_scenario: default_scenario.into(),
    }
}

fn finish_config(mut config: RunConfig, warnings: Vec<String>, opts: &GlobalOptions) -> Result<Scenario> {
    for w in warnings {
        log::warn!("{w}");
    }
    if let Some(w) = opts.workers {
        config.workers = w.max(1);
    }
    Scenario::from_config(config)
}

/// Loads the positional config (or `--config`) with overrides applied.
fn resolve(positional: Option<&PathBuf>, opts: &GlobalOptions) -> Result<Scenario> {
    let path = positional
        .or(opts.config.as_ref())
        .ok_or_else(|| Error::InvalidArgument("a config file is required".into()))?;
    let loaded = load_config_with(path, &load_options(opts, "free_gaussian"))?;
    finish_config(loaded.config, loaded.warnings, opts)
}

pub fn output_root(opts: &GlobalOptions, config: &RunConfig) -> PathBuf {
    if let Some(o) = &opts.out {
        return o.clone();
    }
    if !config.output_dir.is_empty() {
        return PathBuf::from(&config.output_dir);
    }
    std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    atomic_write(path, text.as_bytes())
}

fn write_config(dir: &Path, s: &Scenario) -> Result<()> {
    write_text(&dir.join("config.toml"), &s.config.to_toml())
}

/// Writes every artifact of `report` under `dir`. Each complex dump is read
/// back and its norm compared with the in-memory field.
fn write_artifacts(dir: &Path, report: &AcceptanceReport) -> Result<Vec<Check>> {
    let mut roundtrips = Vec::new();
    for a in &report.artifacts {
        let path = dir.join(&a.file);
        match &a.data {
            ArtifactData::Csv(text) => write_text(&path, text)?,
            ArtifactData::Complex { field, name, time, hbar } => {
                let meta = DumpMeta {
                    name,
                    hbar: *hbar,
                    time: *time,
                    config_hash: &report.config_hash,
                };
                dump::write_complex(&path, field, &meta)?;
                let err = match dump::read(&path)? {
                    Dump::Complex(_, back) => {
                        if back.values() == field.values() {
                            (norm(&back) - norm(field)).abs()
                        } else {
                            f64::INFINITY
                        }
                    }
                    Dump::Real(..) => f64::INFINITY,
                };
                roundtrips.push(Check::new(Some(10), format!("roundtrip_{}", a.file), err, Relation::Below, ROUNDTRIP_TOLERANCE));
            }
            ArtifactData::Real { field, name, time, hbar } => {
                let meta = DumpMeta {
                    name,
                    hbar: *hbar,
                    time: *time,
                    config_hash: &report.config_hash,
                };
                dump::write_real(&path, field, &meta)?;
            }
        }
    }
    Ok(roundtrips)
}

/// Runs the acceptance checks of one scenario and persists its outputs
/// under `<root>/<scenario>/`.
pub fn accept_scenario(s: &Scenario, root: &Path) -> Result<AcceptanceReport> {
    let dir = root.join(s.name());
    let mut report = s.run_acceptance();
    for c in write_artifacts(&dir, &report)? {
        report.push(c);
    }
    write_config(&dir, s)?;
    write_text(&dir.join("acceptance.csv"), &report.to_csv())?;
    write_text(&dir.join("acceptance.txt"), &report.to_text())?;
    Ok(report)
}

fn accept(target: &str, opts: &GlobalOptions) -> Result<Outcome> {
    let scenarios: Vec<Scenario> = if let Some(path) = &opts.config {
        let loaded = load_config_with(path, &load_options(opts, if target == "all" { "free_gaussian" } else { target }))?;
        let s = finish_config(loaded.config, loaded.warnings, opts)?;
        if target != "all" && s.name() != target {
            return Err(Error::InvalidArgument(format!("config describes `{}`, not `{target}`", s.name())));
        }
        vec![s]
    } else {
        let names: Vec<&str> = if target == "all" { catalog_names() } else { vec![target] };
        names
            .into_iter()
            .map(|n| {
                let loaded = load_config_str("", &load_options(opts, n))?;
                finish_config(loaded.config, loaded.warnings, opts)
            })
            .collect::<Result<_>>()?
    };
    let root = output_root(opts, &scenarios[0].config);
    let workers = opts.workers.unwrap_or(scenarios[0].config.workers).max(1);
    let reports = parallel_map(&scenarios, workers, |s| accept_scenario(s, &root))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let hash_of_all = if reports.len() == 1 {
        reports[0].config_hash.clone()
    } else {
        combined_hash(&reports)
    };
    let mut csv = crate::io::CsvBuilder::new("acceptance", &hash_of_all, &CSV_HEADER);
    let mut text = String::new();
    for r in &reports {
        r.csv_rows(&mut csv);
        text.push_str(&r.to_text());
    }
    let _ = writeln!(text, "\n{}", criteria_summary(&reports));
    let passed = reports.iter().all(AcceptanceReport::passed);
    let _ = writeln!(text, "overall: {}", if passed { "PASS" } else { "FAIL" });
    write_text(&root.join("acceptance.csv"), &csv.finish())?;
    write_text(&root.join("acceptance.txt"), &text)?;
    Ok(Outcome {
        summary: text,
        out_dir: Some(root),
        passed,
    })
}

fn combined_hash(reports: &[AcceptanceReport]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for r in reports {
        h.update(r.config_hash.as_bytes());
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// One line per acceptance criterion present in `reports`.
pub fn criteria_summary(reports: &[AcceptanceReport]) -> String {
    let mut crits: Vec<u8> = reports.iter().flat_map(|r| r.checks.iter().filter_map(|c| c.criterion)).collect();
    crits.sort_unstable();
    crits.dedup();
    let mut s = String::new();
    for c in crits {
        let relevant: Vec<(&str, &Check)> = reports
            .iter()
            .flat_map(|r| r.checks.iter().filter(move |k| k.criterion == Some(c)).map(move |k| (r.scenario.as_str(), k)))
            .collect();
        let failed: Vec<String> = relevant.iter().filter(|(_, k)| !k.pass).map(|(sc, k)| format!("{sc}/{}", k.name)).collect();
        if failed.is_empty() {
            let _ = writeln!(s, "criterion {c}: PASS ({} checks)", relevant.len());
        } else {
            let _ = writeln!(s, "criterion {c}: FAIL ({})", failed.join(", "));
        }
    }
    s
}

fn run(s: &Scenario, opts: &GlobalOptions) -> Result<Outcome> {
    let root = output_root(opts, &s.config);
    let dir = root.join(s.name());
    write_config(&dir, s)?;
    let hash = s.config_hash();
    let mut summary = format!("scenario {} (config {hash})\n", s.name());
    match s.primary_evolution() {
        Ok((rec, sys)) => {
            for (i, snap) in rec.snapshots.iter().enumerate() {
                let meta = DumpMeta {
                    name: "psi",
                    hbar: sys.hbar(),
                    time: rec.times[i],
                    config_hash: &hash,
                };
                dump::write_complex(&dir.join(format!("psi_{:06}.cfield", rec.snapshot_step(i))), snap, &meta)?;
            }
            write_text(&dir.join("timeseries.csv"), &rec.to_csv(&hash))?;
            let _ = writeln!(
                summary,
                "evolved {} steps, {} snapshots, norm drift {:e}",
                rec.steps.len(),
                rec.snapshots.len(),
                rec.norm_drift()
            );
            for w in &rec.warnings {
                log::warn!("{w}");
            }
        }
        Err(Error::InvalidArgument(msg)) => {
            let _ = writeln!(summary, "{msg}; writing scenario outputs only");
        }
        Err(e) => return Err(e),
    }
    let report = s.run_acceptance();
    write_artifacts(&dir, &report)?;
    write_text(&dir.join("report.csv"), &report.to_csv())?;
    summary.push_str(&report.to_text());
    Ok(Outcome {
        summary,
        out_dir: Some(dir),
        passed: true,
    })
}

fn lyapunov(s: &Scenario, opts: &GlobalOptions) -> Result<Outcome> {
    let root = output_root(opts, &s.config);
    let dir = root.join(s.name());
    let hash = s.config_hash();
    let mut summary = format!("scenario {} (config {hash})\n", s.name());
    match &s.params {
        ScenarioParams::ToySweep(p) => {
            let rows = scenarios::run_sweep(s, p)?;
            let ratio = s.threshold("reproducibility_ratio");
            write_text(&dir.join("sweep.csv"), &scenarios::sweep_csv(&rows, p.zero_floor, ratio, &hash))?;
            for (i, r) in rows.iter().enumerate() {
                write_text(&dir.join(format!("lyapunov_g{i}.csv")), &r.base.to_csv(&hash))?;
                let _ = writeln!(summary, "g = {}: spectrum {:?}", r.coupling, r.base.spectrum);
            }
        }
        ScenarioParams::Galerkin(_) => {
            let report = s.run_acceptance();
            for a in report.artifacts.iter().filter(|a| a.file.starts_with("lyapunov")) {
                if let ArtifactData::Csv(text) = &a.data {
                    write_text(&dir.join(&a.file), text)?;
                    let _ = writeln!(summary, "wrote {}", a.file);
                }
            }
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "scenario `{}` has no coefficient flow; use galerkin_baseline or toy_chaos_sweep",
                s.name()
            )))
        }
    }
    write_config(&dir, s)?;
    Ok(Outcome {
        summary,
        out_dir: Some(dir),
        passed: true,
    })
}

/// Draws `count` start points from |ψ|² with uniform jitter inside the
/// chosen cell.
pub fn sample_starts(psi: &ComplexField, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let weights: Vec<f64> = psi.values().iter().map(|v| v.norm_sqr()).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidArgument(format!("cannot sample |psi|^2: {e}")))?;
    let grid = psi.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let mut x = grid.point(rng.sample(&dist));
            for (a, xa) in x.iter_mut().enumerate() {
                *xa += (rng.random::<f64>() - 0.5) * grid.spacing(a);
            }
            x
        })
        .collect())
}

fn traj(s: &Scenario, opts: &GlobalOptions) -> Result<Outcome> {
    let root = output_root(opts, &s.config);
    let dir = root.join(s.name());
    let hash = s.config_hash();
    let (rec, sys) = s.primary_evolution()?;
    let history = crate::bohm::VelocityHistory::from_record(&rec, &sys, s.config.evolver.eps_node_rel)?;
    let starts = if s.config.trajectory.starts.is_empty() {
        sample_starts(&rec.snapshots[0], s.config.trajectory.samples, s.config.seed)?
    } else {
        s.config.trajectory.starts.clone()
    };
    let topts = s.trajectory_options();
    let trajs = parallel_map(&starts, s.config.workers, |x0| history.integrate(x0, &topts))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let d = sys.total_dim();
    let mut header = vec!["index".to_string()];
    header.extend((0..d).map(|a| format!("start_x{a}")));
    header.extend((0..d).map(|a| format!("final_x{a}")));
    header.extend(["truncated".to_string(), "node_encountered".to_string()]);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = crate::io::CsvBuilder::new("trajectory-batch", &hash, &header_refs);
    let mut summary = format!("scenario {} (config {hash}): {} trajectories\n", s.name(), trajs.len());
    for (i, (x0, t)) in starts.iter().zip(&trajs).enumerate() {
        write_text(&dir.join(format!("trajectory_{i:03}.csv")), &t.to_csv(&hash))?;
        let mut row = vec![i.to_string()];
        row.extend(x0.iter().map(|v| crate::io::fmt_f64(*v)));
        row.extend(t.final_position().iter().map(|v| crate::io::fmt_f64(*v)));
        row.extend([t.truncated.to_string(), t.node_encountered().to_string()]);
        csv.row(&row);
        let _ = writeln!(summary, "  {i}: {:?} -> {:?}", x0, t.final_position());
    }
    write_text(&dir.join("trajectories.csv"), &csv.finish())?;
    write_config(&dir, s)?;
    Ok(Outcome {
        summary,
        out_dir: Some(dir),
        passed: true,
    })
}

/// Human-readable summary of a field dump or CSV artifact.
pub fn inspect(path: &Path) -> Result<String> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let mut s = String::new();
    match ext {
        "cfield" | "rfield" => {
            let d = dump::read(path)?;
            let h = d.header();
            let g = &h.grid;
            let dims: Vec<String> = g.axes().iter().map(|a| a.points.to_string()).collect();
            let _ = writeln!(s, "file: {}", path.display());
            let _ = writeln!(s, "kind: {}", if matches!(d, Dump::Complex(..)) { "complex" } else { "real" });
            let _ = writeln!(s, "field: {}", h.name);
            let _ = writeln!(s, "dims: {}", dims.join("x"));
            for (i, a) in g.axes().iter().enumerate() {
                let _ = writeln!(s, "axis {i}: [{}, {}] spacing {}", a.lower, a.upper, g.spacing(i));
            }
            let _ = writeln!(s, "boundary: {:?}", g.boundary());
            let _ = writeln!(s, "hbar: {}\ntime: {}\nconfig_hash: {}", h.hbar, h.time, h.config_hash);
            match &d {
                Dump::Complex(_, f) => {
                    let _ = writeln!(s, "norm: {:.17e}", norm(f));
                    let _ = writeln!(s, "max_abs: {:e}", f.max_abs());
                }
                Dump::Real(_, f) => {
                    let v = f.values();
                    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let _ = writeln!(s, "min: {lo:e}\nmax: {hi:e}");
                }
            }
        }
        "csv" => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let mut lines = text.lines();
            let mut header = None;
            let _ = writeln!(s, "file: {}", path.display());
            for l in lines.by_ref() {
                if let Some(meta) = l.strip_prefix('#') {
                    let _ = writeln!(s, "{}", meta.trim());
                } else {
                    header = Some(l);
                    break;
                }
            }
            let header = header.ok_or_else(|| Error::Format {
                path: path.into(),
                message: "no header row".into(),
            })?;
            let _ = writeln!(s, "columns: {}", header);
            let _ = writeln!(s, "rows: {}", lines.filter(|l| !l.is_empty()).count());
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "cannot inspect `{}`: expected .cfield, .rfield or .csv",
                path.display()
            )))
        }
    }
    Ok(s)
}

/// Norm of a `.cfield` dump on disk.
pub fn dump_norm(path: &Path) -> Result<f64> {
    match dump::read(path)? {
        Dump::Complex(_, f) => Ok(norm(&f)),
        Dump::Real(..) => Err(Error::InvalidArgument(format!("{} is a real field", path.display()))),
    }
}

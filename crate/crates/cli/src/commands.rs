//! Subcommand definitions and their implementations.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use qfill_core::backtest::{emit_report, render_table, run_protocol, BacktestConfig, BacktestResult};
use qfill_core::cqem::{build_index, match_events, MatchConfig};
use qfill_core::data::{load_dataset, save_dataset, summarize, EventDataset};
use qfill_core::pqfm::{preset, transform_batch, AnsatzConfig, FeatureMap};
use qfill_core::preprocess::{fit_scaler, Scaler};
use qfill_core::synth::{generate, SynthConfig};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    /// Generate a synthetic RFQ event dataset.
    Gen(GenArgs),
    /// Project a dataset through the quantum feature map.
    Pqfm(PqfmArgs),
    /// Match unseen classical events to precomputed quantum features.
    Match(MatchArgs),
    /// Run the walk-forward backtest and write its report.
    Backtest(BacktestArgs),
    /// Re-render report files from a stored backtest result.
    Report(ReportArgs),
    /// Re-run a recorded command and verify its outputs byte for byte.
    Repro(ReproArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenArgs {
    /// Generator config (JSON); defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the planted ground truth.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Where to write dataset statistics.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PqfmArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Ansatz config (JSON); may name a preset and override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// "shorter" or "longer".
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    #[arg(long)]
    pub qubits: Option<usize>,
    /// Reuse a stored scaler instead of fitting one on the input.
    #[arg(long)]
    pub scaler: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MatchArgs {
    /// Quantum features of the sample.
    #[arg(long)]
    pub sample: PathBuf,
    /// Classical features of the same sample.
    #[arg(long)]
    pub classical_sample: PathBuf,
    /// Classical events to match.
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub bins: usize,
    /// Also match pool events that are part of the sample.
    #[arg(long)]
    pub include_source: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BacktestArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated `name=path` pairs.
    #[arg(long, value_parser = parse_sources)]
    pub sources: Sources,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// `result.json` written by `backtest`.
    #[arg(long)]
    pub result: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Reference source for the comparison table; defaults to the first source.
    #[arg(long)]
    pub baseline: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReproArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Keep the re-run outputs here instead of a temporary directory.
    #[arg(long)]
    pub keep: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sources(pub Vec<(String, PathBuf)>);

fn parse_sources(s: &str) -> Result<Sources, String> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.is_empty()) {
        let (name, path) = part.split_once('=').ok_or_else(|| format!("expected name=path, got {part:?}"))?;
        if name.is_empty() || path.is_empty() {
            return Err(format!("expected name=path, got {part:?}"));
        }
        if out.iter().any(|(n, _): &(String, PathBuf)| n == name) {
            return Err(format!("duplicate source name {name:?}"));
        }
        out.push((name.to_string(), PathBuf::from(path)));
    }
    if out.is_empty() {
        return Err("no sources given".into());
    }
    Ok(Sources(out))
}

/// Where a command writes: a set of files or one directory.
pub enum OutputLayout {
    Files(Vec<(String, PathBuf)>),
    Dir(PathBuf),
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn absolute(p: &Path) -> Result<PathBuf, CliError> {
    std::path::absolute(p).map_err(CliError::io(p))
}

fn abs_opt(p: &Option<PathBuf>) -> Result<Option<PathBuf>, CliError> {
    p.as_deref().map(absolute).transpose()
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Pqfm(_) => "pqfm",
            Command::Match(_) => "match",
            Command::Backtest(_) => "backtest",
            Command::Report(_) => "report",
            Command::Repro(_) => "repro",
        }
    }

    /// The same command with every path made absolute.
    pub fn absolutized(&self) -> Result<Command, CliError> {
        Ok(match self {
            Command::Gen(a) => Command::Gen(GenArgs {
                config: abs_opt(&a.config)?,
                out: absolute(&a.out)?,
                truth: abs_opt(&a.truth)?,
                stats: abs_opt(&a.stats)?,
            }),
            Command::Pqfm(a) => Command::Pqfm(PqfmArgs {
                input: absolute(&a.input)?,
                out: absolute(&a.out)?,
                config: abs_opt(&a.config)?,
                scaler: abs_opt(&a.scaler)?,
                ..a.clone()
            }),
            Command::Match(a) => Command::Match(MatchArgs {
                sample: absolute(&a.sample)?,
                classical_sample: absolute(&a.classical_sample)?,
                pool: absolute(&a.pool)?,
                out: absolute(&a.out)?,
                ..a.clone()
            }),
            Command::Backtest(a) => Command::Backtest(BacktestArgs {
                config: abs_opt(&a.config)?,
                sources: Sources(
                    a.sources.0.iter().map(|(n, p)| Ok((n.clone(), absolute(p)?))).collect::<Result<_, CliError>>()?,
                ),
                out: absolute(&a.out)?,
            }),
            Command::Report(a) => {
                Command::Report(ReportArgs { result: absolute(&a.result)?, out: absolute(&a.out)?, ..a.clone() })
            }
            Command::Repro(a) => Command::Repro(ReproArgs { manifest: absolute(&a.manifest)?, keep: abs_opt(&a.keep)? }),
        })
    }

    /// Command-line form of the command, for the manifest.
    pub fn argv(&self, seed: Option<u64>) -> Vec<String> {
        let mut v = vec!["qfill".to_string()];
        if let Some(s) = seed {
            v.extend(["--seed".into(), s.to_string()]);
        }
        v.push(self.name().into());
        let mut flag = |name: &str, p: &Path| {
            v.push(format!("--{name}"));
            v.push(p.display().to_string());
        };
        match self {
            Command::Gen(a) => {
                if let Some(c) = &a.config {
                    flag("config", c);
                }
                flag("out", &a.out);
                if let Some(t) = &a.truth {
                    flag("truth", t);
                }
                if let Some(s) = &a.stats {
                    flag("stats", s);
                }
            }
            Command::Pqfm(a) => {
                flag("in", &a.input);
                flag("out", &a.out);
                if let Some(c) = &a.config {
                    flag("config", c);
                }
                if let Some(s) = &a.scaler {
                    flag("scaler", s);
                }
                if let Some(p) = &a.preset {
                    v.extend(["--preset".into(), p.clone()]);
                }
                if let Some(q) = a.qubits {
                    v.extend(["--qubits".into(), q.to_string()]);
                }
            }
            Command::Match(a) => {
                flag("sample", &a.sample);
                flag("classical-sample", &a.classical_sample);
                flag("pool", &a.pool);
                flag("out", &a.out);
                v.extend(["--bins".into(), a.bins.to_string()]);
                if a.include_source {
                    v.push("--include-source".into());
                }
            }
            Command::Backtest(a) => {
                if let Some(c) = &a.config {
                    flag("config", c);
                }
                flag("out", &a.out);
                let s: Vec<String> = a.sources.0.iter().map(|(n, p)| format!("{n}={}", p.display())).collect();
                v.extend(["--sources".into(), s.join(",")]);
            }
            Command::Report(a) => {
                flag("result", &a.result);
                flag("out", &a.out);
                if let Some(b) = &a.baseline {
                    v.extend(["--baseline".into(), b.clone()]);
                }
            }
            Command::Repro(a) => {
                flag("manifest", &a.manifest);
                if let Some(k) = &a.keep {
                    flag("keep", k);
                }
            }
        }
        v
    }

    pub fn configs(&self) -> Vec<(String, PathBuf)> {
        let c = match self {
            Command::Gen(a) => a.config.clone(),
            Command::Pqfm(a) => a.config.clone(),
            Command::Backtest(a) => a.config.clone(),
            _ => None,
        };
        c.map(|p| ("config".to_string(), p)).into_iter().collect()
    }

    pub fn inputs(&self) -> Vec<(String, PathBuf)> {
        match self {
            Command::Pqfm(a) => {
                let mut v = vec![("data".to_string(), a.input.clone())];
                if let Some(s) = &a.scaler {
                    v.push(("scaler".into(), s.clone()));
                }
                v
            }
            Command::Match(a) => vec![
                ("sample".into(), a.sample.clone()),
                ("classical_sample".into(), a.classical_sample.clone()),
                ("pool".into(), a.pool.clone()),
            ],
            Command::Backtest(a) => a.sources.0.iter().map(|(n, p)| (format!("source:{n}"), p.clone())).collect(),
            Command::Report(a) => vec![("result".into(), a.result.clone())],
            Command::Gen(_) | Command::Repro(_) => Vec::new(),
        }
    }

    pub fn outputs(&self) -> OutputLayout {
        match self {
            Command::Gen(a) => {
                let mut v = vec![("data".to_string(), a.out.clone())];
                if let Some(t) = &a.truth {
                    v.push(("truth".into(), t.clone()));
                }
                if let Some(s) = &a.stats {
                    v.push(("stats".into(), s.clone()));
                }
                OutputLayout::Files(v)
            }
            Command::Pqfm(a) => OutputLayout::Files(vec![
                ("data".into(), a.out.clone()),
                ("scaler".into(), sidecar(&a.out, ".scaler.json")),
            ]),
            Command::Match(a) => OutputLayout::Files(vec![
                ("data".into(), a.out.clone()),
                ("report".into(), sidecar(&a.out, ".report.json")),
            ]),
            Command::Backtest(a) => OutputLayout::Dir(a.out.clone()),
            Command::Report(a) => OutputLayout::Dir(a.out.clone()),
            Command::Repro(_) => OutputLayout::Files(Vec::new()),
        }
    }

    /// Where the manifest of this command goes.
    pub fn manifest_path(&self) -> Option<PathBuf> {
        match self.outputs() {
            OutputLayout::Dir(d) => Some(d.join("manifest.json")),
            OutputLayout::Files(f) => f.first().map(|(_, p)| sidecar(p, ".manifest.json")),
        }
    }

    /// The same command writing every output below `root`.
    pub fn redirected(&self, root: &Path) -> Command {
        let file = |role: &str, p: &Path| root.join(format!("{role}-{}", p.file_name().unwrap_or_default().to_string_lossy()));
        match self {
            Command::Gen(a) => Command::Gen(GenArgs {
                out: file("data", &a.out),
                truth: a.truth.as_deref().map(|t| file("truth", t)),
                stats: a.stats.as_deref().map(|s| file("stats", s)),
                ..a.clone()
            }),
            Command::Pqfm(a) => Command::Pqfm(PqfmArgs { out: file("data", &a.out), ..a.clone() }),
            Command::Match(a) => Command::Match(MatchArgs { out: file("data", &a.out), ..a.clone() }),
            Command::Backtest(a) => Command::Backtest(BacktestArgs { out: root.join("out"), ..a.clone() }),
            Command::Report(a) => Command::Report(ReportArgs { out: root.join("out"), ..a.clone() }),
            Command::Repro(a) => Command::Repro(a.clone()),
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::ConfigParse { path: path.to_path_buf(), message: e.to_string() })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("value serialises");
    fs::write(path, text + "\n").map_err(CliError::io(path))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => fs::create_dir_all(d).map_err(CliError::io(d)),
        _ => Ok(()),
    }
}

fn save(ds: &EventDataset, path: &Path) -> Result<(), CliError> {
    ensure_parent(path)?;
    Ok(save_dataset(ds, path)?)
}

/// Runs a pipeline command; `seed` overrides the stage's master seed.
pub fn execute(cmd: &Command, seed: Option<u64>) -> Result<(), CliError> {
    match cmd {
        Command::Gen(a) => run_gen(a, seed),
        Command::Pqfm(a) => run_pqfm(a, seed),
        Command::Match(a) => run_match(a),
        Command::Backtest(a) => run_backtest(a, seed),
        Command::Report(a) => run_report(a),
        Command::Repro(_) => Err(CliError::Usage("repro cannot be nested".into())),
    }
}

fn run_gen(a: &GenArgs, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg: SynthConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => SynthConfig::default(),
    };
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    let (dataset, truth) = generate(&cfg)?;
    save(&dataset, &a.out)?;
    if let Some(t) = &a.truth {
        ensure_parent(t)?;
        write_json(t, &truth)?;
    }
    if let Some(s) = &a.stats {
        ensure_parent(s)?;
        write_json(s, &summarize(&dataset)?)?;
    }
    log::info!("generated {} events ({} labeled)", dataset.len(), dataset.labeled_count());
    Ok(())
}

/// Builds the ansatz from a config file or preset. A config holding a
/// `"preset"` key starts from that preset and overrides the listed fields.
pub fn resolve_ansatz(
    config: Option<&Path>,
    preset_name: Option<&str>,
    qubits: Option<usize>,
) -> Result<AnsatzConfig, CliError> {
    let parse_err = |path: &Path, e: serde_json::Error| CliError::ConfigParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut cfg = match (config, preset_name) {
        (Some(path), _) => {
            let mut value: Value = read_json(path)?;
            if let Some(name) = value.get("preset").cloned() {
                let name = name.as_str().ok_or_else(|| CliError::ConfigParse {
                    path: path.to_path_buf(),
                    message: "preset must be a string".into(),
                })?;
                let q = value.get("qubits").and_then(Value::as_u64).map_or(16, |q| q as usize);
                let mut base = serde_json::to_value(preset(name, q)?).expect("config serialises");
                if let (Value::Object(b), Value::Object(o)) = (&mut base, &mut value) {
                    o.remove("preset");
                    b.extend(std::mem::take(o));
                }
                value = base;
            }
            serde_json::from_value(value).map_err(|e| parse_err(path, e))?
        }
        (None, Some(name)) => preset(name, qubits.unwrap_or(16))?,
        (None, None) => AnsatzConfig::default(),
    };
    if let Some(q) = qubits {
        cfg.qubits = q;
    }
    Ok(cfg)
}

fn run_pqfm(a: &PqfmArgs, seed: Option<u64>) -> Result<(), CliError> {
    let dataset = load_dataset(&a.input)?;
    let mut cfg = resolve_ansatz(a.config.as_deref(), a.preset.as_deref(), a.qubits)?;
    if let Some(s) = seed {
        cfg.noise.noise_seed = s;
    }
    let scaler: Scaler = match &a.scaler {
        Some(p) => read_json(p)?,
        None => fit_scaler(&dataset)?,
    };
    let map = FeatureMap::new(cfg, scaler)?;
    let projected = transform_batch(&dataset, &map)?;
    save(&projected, &a.out)?;
    write_json(&sidecar(&a.out, ".scaler.json"), &map.scaler)?;
    log::info!("projected {} events to {} features", projected.len(), projected.feature_count());
    Ok(())
}

fn run_match(a: &MatchArgs) -> Result<(), CliError> {
    let quantum = load_dataset(&a.sample)?;
    let classical = load_dataset(&a.classical_sample)?;
    let pool = load_dataset(&a.pool)?;
    let cfg = MatchConfig { n_bins: a.bins, exclude_source: !a.include_source };
    let index = build_index(&classical, &quantum, &cfg)?;
    let (matched, report) = match_events(&index, &pool, &cfg)?;
    save(&matched, &a.out)?;
    write_json(&sidecar(&a.out, ".report.json"), &report)?;
    log::info!("matched {}/{} events", report.matched, report.candidates);
    Ok(())
}

fn write_report_dir(result: &BacktestResult, out: &Path, baseline: Option<&str>) -> Result<(), CliError> {
    emit_report(result, out)?;
    let baseline = baseline
        .filter(|b| result.sources.iter().any(|s| s == b))
        .or(result.sources.first().map(String::as_str))
        .unwrap_or_default();
    let table = if result.sources.is_empty() { String::new() } else { render_table(result, baseline) };
    let path = out.join("table.md");
    fs::write(&path, table).map_err(CliError::io(&path))
}

fn run_backtest(a: &BacktestArgs, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg: BacktestConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => BacktestConfig::default(),
    };
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let loaded: Vec<(String, EventDataset)> =
        a.sources.0.iter().map(|(n, p)| Ok((n.clone(), load_dataset(p)?))).collect::<Result<_, CliError>>()?;
    let refs: Vec<(String, &EventDataset)> = loaded.iter().map(|(n, d)| (n.clone(), d)).collect();
    let result = run_protocol(&cfg, &refs)?;
    fs::create_dir_all(&a.out).map_err(CliError::io(&a.out))?;
    write_json(&a.out.join("result.json"), &result)?;
    write_report_dir(&result, &a.out, Some(&cfg.baseline))?;
    log::info!("{} records, {} skipped instances", result.records.len(), result.skipped.len());
    Ok(())
}

fn run_report(a: &ReportArgs) -> Result<(), CliError> {
    let result: BacktestResult = read_json(&a.result)?;
    fs::create_dir_all(&a.out).map_err(CliError::io(&a.out))?;
    write_report_dir(&result, &a.out, a.baseline.as_deref())
}

/// Files currently present for a command's outputs, by role.
pub fn collect_outputs(cmd: &Command) -> Result<Vec<(String, PathBuf)>, CliError> {
    match cmd.outputs() {
        OutputLayout::Files(f) => Ok(f),
        OutputLayout::Dir(d) => {
            let mut names: Vec<String> = fs::read_dir(&d)
                .map_err(CliError::io(&d))?
                .filter_map(Result::ok)
                .filter(|e| e.path().is_file())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| n != "manifest.json")
                .collect();
            names.sort();
            Ok(names.into_iter().map(|n| (n.clone(), d.join(n))).collect())
        }
    }
}

pub fn verdict_json(verified: bool, checked: &[String]) -> Value {
    json!({ "verified": verified, "outputs": checked })
}

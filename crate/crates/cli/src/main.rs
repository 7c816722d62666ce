//! `qfill`: synthetic data generation, quantum feature projection, event
//! matching and walk-forward backtesting from the command line.

mod commands;
mod error;
mod manifest;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::Parser;

use commands::{collect_outputs, execute, verdict_json, Command, ReproArgs};
use error::CliError;
use manifest::{FileDigest, RunManifest, Timing};

#[derive(Debug, Parser)]
#[command(name = "qfill", version, about)]
struct Cli {
    /// Master seed for the stage (overrides the value in its config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all available cores.
    #[arg(long, global = true, env = "QFILL_THREADS")]
    threads: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

fn digests(list: &[(String, std::path::PathBuf)]) -> Result<Vec<FileDigest>, CliError> {
    list.iter().map(|(role, p)| FileDigest::of(role, p)).collect()
}

fn run_recorded(cmd: &Command, seed: Option<u64>, threads: usize) -> Result<(), CliError> {
    let cmd = cmd.absolutized()?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
    let clock = Instant::now();
    execute(&cmd, seed)?;
    let manifest = RunManifest {
        tool: "qfill".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        argv: cmd.argv(seed),
        configs: digests(&cmd.configs())?,
        inputs: digests(&cmd.inputs())?,
        outputs: digests(&collect_outputs(&cmd)?)?,
        command: cmd.clone(),
        seed,
        threads,
        timing: Timing { started_unix_ms: started, elapsed_ms: clock.elapsed().as_millis() },
    };
    if let Some(path) = cmd.manifest_path() {
        manifest.save(&path)?;
    }
    Ok(())
}

fn check_unchanged(recorded: &[FileDigest]) -> Result<(), CliError> {
    for d in recorded {
        let now = FileDigest::of(&d.role, &d.path)?;
        if now.sha256 != d.sha256 {
            return Err(CliError::InputChanged { role: d.role.clone(), path: d.path.clone() });
        }
    }
    Ok(())
}

fn repro(args: &ReproArgs) -> Result<(), CliError> {
    let manifest = RunManifest::load(&args.manifest)?;
    check_unchanged(&manifest.configs)?;
    check_unchanged(&manifest.inputs)?;
    let tmp;
    let root: &Path = match &args.keep {
        Some(k) => {
            std::fs::create_dir_all(k).map_err(CliError::io(k))?;
            k
        }
        None => {
            tmp = tempfile::tempdir().map_err(CliError::io(std::env::temp_dir()))?;
            tmp.path()
        }
    };
    let rerun = manifest.command.redirected(root);
    execute(&rerun, manifest.seed)?;
    let fresh = digests(&collect_outputs(&rerun)?)?;
    let mut mismatched = Vec::new();
    for old in &manifest.outputs {
        match fresh.iter().find(|f| f.role == old.role) {
            Some(f) if f.sha256 == old.sha256 => {}
            _ => mismatched.push(old.role.clone()),
        }
    }
    mismatched.extend(fresh.iter().filter(|f| !manifest.outputs.iter().any(|o| o.role == f.role)).map(|f| f.role.clone()));
    if !mismatched.is_empty() {
        return Err(CliError::DigestMismatch(mismatched));
    }
    let roles: Vec<String> = manifest.outputs.iter().map(|o| o.role.clone()).collect();
    println!("{}", verdict_json(true, &roles));
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    // a second initialisation in the same process is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    match &cli.command {
        Command::Repro(a) => repro(a),
        cmd => run_recorded(cmd, cli.seed, threads),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `delayfront`: configuration-driven runs of the delayfront experiments.
//!
//! Every run writes its artifacts and a `run.json` manifest into `--out`.
//! Exit status: 0 all assertions pass, 1 an assertion failed, 2 configuration
//! error, 3 numerical failure.

mod commands;
mod config;
mod error;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{Map, Value};

use crate::config::{RunConfig, Subcommand};
use crate::error::CliError;
use crate::manifest::{Outcome, RunManifest, Status};

#[derive(Debug, Parser)]
#[command(name = "delayfront", version, about = "Delayed reaction-diffusion experiments")]
struct Args {
    /// Experiment to run; defaults to the config's `subcommand` key.
    #[arg(value_enum)]
    command: Option<Subcommand>,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps and randomized suites.
    #[arg(long)]
    workers: Option<usize>,
}

struct Run {
    subcommand: Option<Subcommand>,
    seed: u64,
    config: Value,
    rescaling: Value,
    result: Result<Outcome, CliError>,
}

fn execute(args: &Args) -> Run {
    let mut run = Run {
        subcommand: args.command,
        seed: args.seed.unwrap_or(0),
        config: Value::Null,
        rescaling: Value::Null,
        result: Ok(Outcome::default()),
    };
    let (_, cfg) = match config::load(&args.config) {
        Ok(v) => v,
        Err(e) => {
            if let Ok(text) = std::fs::read_to_string(&args.config) {
                run.config = Value::String(text);
            }
            run.result = Err(e);
            return run;
        }
    };
    run.config = serde_json::to_value(&cfg).unwrap_or(Value::Null);
    run.seed = args.seed.or(cfg.seed).unwrap_or(0);
    run.subcommand = match (args.command, cfg.subcommand) {
        (Some(a), Some(b)) if a != b => {
            run.result = Err(CliError::Config(format!(
                "command line asks for `{}` but the config names `{}`",
                a.name(),
                b.name()
            )));
            return run;
        }
        (a, b) => a.or(b),
    };
    let Some(sub) = run.subcommand else {
        run.result = Err(CliError::Config("no subcommand given on the command line or in the config".into()));
        return run;
    };
    if let Some(Ok(m)) = cfg.model.as_ref().map(|m| m.build()) {
        run.rescaling = serde_json::to_value(m.rescaling).unwrap_or(Value::Null);
    }
    run.result = dispatch(sub, &cfg, run.seed, args.workers);
    run
}

fn dispatch(sub: Subcommand, cfg: &RunConfig, seed: u64, workers: Option<usize>) -> Result<Outcome, CliError> {
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
            pool.install(|| commands::dispatch(sub, cfg, seed))
        }
        None => commands::dispatch(sub, cfg, seed),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let args = Args::parse();
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("cannot create {}: {e}", args.out.display());
        return ExitCode::from(2);
    }
    let mut run = execute(&args);

    let mut artifacts = Vec::new();
    if let Ok(outcome) = &run.result {
        for (name, contents) in &outcome.files {
            if let Err(e) = output::write_atomic(&args.out.join(name), contents.as_bytes()) {
                run.result = Err(e);
                break;
            }
            artifacts.push(name.clone());
        }
    }
    let (status, error, derived, assertions) = match &run.result {
        Ok(o) => {
            let s = if o.passed() { Status::Pass } else { Status::AssertionFailure };
            (s, None, o.derived.clone(), o.assertions.clone())
        }
        Err(e) => (Status::from_code(e.exit_code()), Some(e.to_string()), Map::new(), Vec::new()),
    };
    artifacts.push("run.json".into());
    let manifest = RunManifest {
        program: "delayfront".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: run.subcommand.map(|s| s.name().to_string()),
        config_path: Some(args.config.display().to_string()),
        seed: run.seed,
        workers: args.workers,
        config: run.config,
        rescaling: run.rescaling,
        derived,
        assertions,
        status,
        exit_code: status.exit_code(),
        error: error.clone(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        artifacts,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    if let Err(e) = output::write_atomic(&args.out.join("run.json"), text.as_bytes()) {
        eprintln!("{e}");
    }

    if let Ok(o) = &run.result {
        if matches!(run.subcommand, Some(Subcommand::Roots | Subcommand::Model)) {
            if let Some((_, json)) = o.files.first() {
                print!("{json}");
            }
        }
    }
    for a in &manifest.assertions {
        eprintln!("{} {} (margin {:e}) {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.margin, a.detail);
    }
    if let Some(e) = error {
        eprintln!("error: {e}");
    }
    ExitCode::from(status.exit_code() as u8)
}

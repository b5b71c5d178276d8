//! `randhom`: command-line driver for perforated-domain experiments.
//!
//! Exit codes: 0 success, 1 i/o failure, 2 validation error, 3 solver
//! failure (including sweeps where some rows failed).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod config;
mod presets;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use config::{Command, ConfigFile, FORMAT_VERSION};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    Validation(Vec<String>),
    Solver(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Validation(lines) => lines.join("\n"),
            CliError::Solver(m) | CliError::Io(m) => m.clone(),
        }
    }
}

impl From<randhom::Error> for CliError {
    fn from(e: randhom::Error) -> Self {
        match e {
            randhom::Error::SolverFailure { .. } => CliError::Solver(e.to_string()),
            randhom::Error::Io(m) => CliError::Io(m),
            other => CliError::Validation(vec![other.to_string()]),
        }
    }
}

#[derive(Parser)]
#[command(name = "randhom", version, about = "Random perforated domains and homogenization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Realize one perforated domain; writes the mask, points and stats.
    Geometry(RunArgs),
    /// Solve the perforated Dirichlet problem on one realization.
    Solve(RunArgs),
    /// Newton capacity oracle, strange term, or conductivity tensor.
    Capacity(RunArgs),
    /// Full homogenization sweep over a decreasing sequence of scales.
    Sweep(RunArgs),
    /// Spread of a functional over growing cubes.
    Ergodic(RunArgs),
    /// Uniform-density ratios of the hole set.
    DensityCheck(RunArgs),
    /// Report every violated rule of a config without running it.
    Validate(Source),
    /// List the built-in presets.
    Presets,
}

#[derive(Args, Clone)]
struct Source {
    /// JSON config file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in config by name.
    #[arg(long)]
    preset: Option<String>,
    /// Override a config value, e.g. `--set sweep.replicas=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Master seed; replaces the one in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Parent directory of the hash-named run directory.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub format_version: u32,
    pub command: String,
    pub tool_version: String,
    pub config: ConfigFile,
    pub seed: Option<u64>,
    /// SHA-256 of the resolved config and tool version.
    pub input_hash: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    /// Artifact paths relative to the run directory.
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    /// `ok`, `partial` or `failed`.
    pub status: String,
    pub error: Option<String>,
    pub summary: Value,
}

fn load(source: &Source) -> Result<ConfigFile, CliError> {
    let text = match (&source.config, &source.preset) {
        (Some(path), _) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(vec![format!("cannot read {}: {e}", path.display())]))?,
        (None, Some(name)) => presets::get(name)
            .ok_or_else(|| CliError::Validation(vec![format!("unknown preset `{name}`; see `randhom presets`")]))?
            .to_string(),
        (None, None) => return Err(CliError::Validation(vec!["need --config or --preset".into()])),
    };
    config::parse(&config::apply_overrides(&text, &source.sets)?)
}

pub fn input_hash(config: &ConfigFile) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("config serializes"));
    h.update(b"\n");
    h.update(TOOL_VERSION.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn run(command: Command, args: &RunArgs) -> Result<PathBuf, CliError> {
    let mut config = load(&args.source)?;
    if config.command != command {
        return Err(CliError::Validation(vec![format!(
            "config is for `{}`, not `{}`",
            config.command.name(),
            command.name()
        )]));
    }
    if let Some(seed) = args.seed {
        match config.seed_mut() {
            Some(s) => *s = seed,
            None => eprintln!("warning: --seed ignored, this run draws no random numbers"),
        }
    }
    let (errors, warnings) = config.diagnostics();
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }

    let hash = input_hash(&config);
    let dir = args.out.join(&hash[..16]);
    let started = now();
    let result = run::execute(&config);
    let finished = now();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;

    let mut record = RunRecord {
        format_version: FORMAT_VERSION,
        command: command.name().to_string(),
        tool_version: TOOL_VERSION.to_string(),
        seed: config.seed(),
        config,
        input_hash: hash,
        started_unix: started,
        finished_unix: finished,
        outputs: Vec::new(),
        warnings,
        status: "ok".into(),
        error: None,
        summary: Value::Null,
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            record.status = "failed".into();
            record.error = Some(e.message());
            write(&dir.join("record.json"), &serde_json::to_vec_pretty(&record).expect("record serializes"))?;
            return Err(e);
        }
    };
    for (name, bytes) in &outcome.artifacts {
        write(&dir.join(name), bytes)?;
        record.outputs.push(name.clone());
    }
    record.warnings.extend(outcome.warnings);
    record.summary = outcome.summary;
    if outcome.partial {
        record.status = "partial".into();
    }
    write(&dir.join("record.json"), &serde_json::to_vec_pretty(&record).expect("record serializes"))?;
    if outcome.partial {
        return Err(CliError::Solver(format!("some rows failed; partial results in {}", dir.display())));
    }
    Ok(dir)
}

fn validate(source: &Source) -> Result<(), CliError> {
    let (errors, warnings) = match load(source) {
        Ok(config) => config.diagnostics(),
        Err(CliError::Validation(errors)) => (errors, Vec::new()),
        Err(e) => return Err(e),
    };
    let out = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "diagnostics": errors,
        "warnings": warnings,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json serializes"));
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(Vec::new()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Geometry(a) => (Command::Geometry, a),
        Sub::Solve(a) => (Command::Solve, a),
        Sub::Capacity(a) => (Command::Capacity, a),
        Sub::Sweep(a) => (Command::Sweep, a),
        Sub::Ergodic(a) => (Command::Ergodic, a),
        Sub::DensityCheck(a) => (Command::DensityCheck, a),
        Sub::Validate(source) => {
            return match validate(&source) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    let msg = e.message();
                    if !msg.is_empty() {
                        eprintln!("error: {msg}");
                    }
                    ExitCode::from(e.code())
                }
            };
        }
        Sub::Presets => {
            for (name, _) in presets::ALL {
                println!("{name}");
            }
            return ExitCode::SUCCESS;
        }
    };
    match run(command, &args) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

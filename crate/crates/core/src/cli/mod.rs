//! Command-line runner: config resolution, thread pool, output files and
//! the run manifest.

pub mod config;
pub mod pipelines;
pub mod validate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use config::{
    read_config, DiscretizeConfig, EnsembleConfig, NonmarkovConfig, SpectralConfig, TransportConfig, ValidateConfig,
};
use pipelines::RunOutput;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "qnet", version, about = "Open oscillators coupled to harmonic networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Damping kernel, windowed spectral density and probed spectrum.
    Spectral(RunArgs),
    /// Excitation maps after a local excitation.
    Transport(RunArgs),
    /// GIP trajectory and witness for one network.
    Nonmarkov(RunArgs),
    /// Witness statistics over random network families.
    Ensemble(RunArgs),
    /// Finite bath from a continuous spectral density.
    Discretize(RunArgs),
    /// Invariant suite.
    Validate(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectral(_) => "spectral",
            Command::Transport(_) => "transport",
            Command::Nonmarkov(_) => "nonmarkov",
            Command::Ensemble(_) => "ensemble",
            Command::Discretize(_) => "discretize",
            Command::Validate(_) => "validate",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Spectral(a)
            | Command::Transport(a)
            | Command::Nonmarkov(a)
            | Command::Ensemble(a)
            | Command::Discretize(a)
            | Command::Validate(a) => a,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON config file (or a manifest from an earlier run).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Realizations per ensemble point; overrides the config.
    #[arg(long)]
    pub realizations: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig1,
    Fig2,
    Fig4,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub resolved_config: Value,
    pub master_seed: u64,
    pub seeds: Value,
    pub code_version: String,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub status: String,
    pub exit_code: u8,
    pub error: Option<String>,
    pub failure_count: usize,
    pub failures: Vec<Value>,
    pub metrics: Value,
    pub outputs: Vec<String>,
}

/// A fully resolved run, ready to execute.
#[derive(Debug, Clone)]
pub enum ResolvedRun {
    Spectral(SpectralConfig),
    Transport(TransportConfig),
    Nonmarkov(NonmarkovConfig),
    Ensemble(EnsembleConfig),
    Discretize(DiscretizeConfig),
    Validate(ValidateConfig),
}

impl ResolvedRun {
    fn config_json(&self) -> Result<Value> {
        Ok(match self {
            ResolvedRun::Spectral(c) => serde_json::to_value(c)?,
            ResolvedRun::Transport(c) => serde_json::to_value(c)?,
            ResolvedRun::Nonmarkov(c) => serde_json::to_value(c)?,
            ResolvedRun::Ensemble(c) => serde_json::to_value(c)?,
            ResolvedRun::Discretize(c) => serde_json::to_value(c)?,
            ResolvedRun::Validate(c) => serde_json::to_value(c)?,
        })
    }

    fn seed(&self) -> u64 {
        match self {
            ResolvedRun::Spectral(c) => c.seed,
            ResolvedRun::Transport(c) => c.seed,
            ResolvedRun::Nonmarkov(c) => c.seed,
            ResolvedRun::Ensemble(c) => c.seed,
            ResolvedRun::Discretize(c) => c.seed,
            ResolvedRun::Validate(c) => c.seed,
        }
    }

    fn execute(&self) -> Result<RunOutput> {
        match self {
            ResolvedRun::Spectral(c) => pipelines::spectral(c),
            ResolvedRun::Transport(c) => pipelines::transport(c),
            ResolvedRun::Nonmarkov(c) => pipelines::nonmarkov(c),
            ResolvedRun::Ensemble(c) => pipelines::run_ensemble(c),
            ResolvedRun::Discretize(c) => pipelines::discretize(c),
            ResolvedRun::Validate(c) => pipelines::validate(c),
        }
    }
}

fn base_config<T: DeserializeOwned>(args: &RunArgs, preset: impl FnOnce(Option<Preset>) -> Result<T>) -> Result<T> {
    match (&args.config, args.preset) {
        (Some(_), Some(_)) => Err(Error::InvalidParameter("use either --config or --preset, not both".into())),
        (Some(path), None) => read_config(path),
        (None, p) => preset(p),
    }
}

fn preset_mismatch(command: &str, p: Preset) -> Error {
    Error::InvalidParameter(format!("preset {p:?} does not apply to `{command}`"))
}

/// Applies presets, files and flag overrides, then validates.
pub fn resolve(command: &Command) -> Result<ResolvedRun> {
    let args = command.args();
    let name = command.name();
    if args.threads == Some(0) {
        return Err(Error::InvalidParameter("--threads must be at least 1".into()));
    }
    if args.realizations.is_some() && !matches!(command, Command::Ensemble(_)) {
        return Err(Error::InvalidParameter("--realizations applies to `ensemble` only".into()));
    }
    let run = match command {
        Command::Spectral(_) => {
            let mut c: SpectralConfig = base_config(args, |p| match p {
                None | Some(Preset::Fig1) => Ok(SpectralConfig::fig1()),
                Some(p) => Err(preset_mismatch(name, p)),
            })?;
            c.seed = args.seed.unwrap_or(c.seed);
            c.validate()?;
            ResolvedRun::Spectral(c)
        }
        Command::Transport(_) => {
            let mut c: TransportConfig = base_config(args, |p| match p {
                None | Some(Preset::Fig2) => Ok(TransportConfig::fig2()),
                Some(p) => Err(preset_mismatch(name, p)),
            })?;
            c.seed = args.seed.unwrap_or(c.seed);
            c.validate()?;
            ResolvedRun::Transport(c)
        }
        Command::Nonmarkov(_) => {
            let mut c: NonmarkovConfig = base_config(args, |p| match p {
                None | Some(Preset::Fig4) => Ok(NonmarkovConfig::fig4()),
                Some(p) => Err(preset_mismatch(name, p)),
            })?;
            c.seed = args.seed.unwrap_or(c.seed);
            c.validate()?;
            ResolvedRun::Nonmarkov(c)
        }
        Command::Ensemble(_) => {
            let mut c: EnsembleConfig = base_config(args, |p| match p {
                None | Some(Preset::Fig4) => Ok(EnsembleConfig::fig4()),
                Some(p) => Err(preset_mismatch(name, p)),
            })?;
            c.seed = args.seed.unwrap_or(c.seed);
            c.realizations = args.realizations.unwrap_or(c.realizations);
            c.validate()?;
            ResolvedRun::Ensemble(c)
        }
        Command::Discretize(_) => {
            let mut c: DiscretizeConfig = base_config(args, |p| match p {
                None => Ok(DiscretizeConfig::ohmic()),
                Some(p) => Err(preset_mismatch(name, p)),
            })?;
            c.seed = args.seed.unwrap_or(c.seed);
            c.validate()?;
            ResolvedRun::Discretize(c)
        }
        Command::Validate(_) => {
            let mut c: ValidateConfig = base_config(args, |p| match p {
                None => Ok(ValidateConfig::default()),
                Some(p) => Err(preset_mismatch(name, p)),
            })?;
            c.seed = args.seed.unwrap_or(c.seed);
            c.validate()?;
            ResolvedRun::Validate(c)
        }
    };
    Ok(run)
}

fn write_outputs(dir: &Path, files: &[(String, String)], manifest: &RunManifest) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in files {
        std::fs::write(dir.join(name), body)?;
    }
    let text = serde_json::to_string_pretty(manifest)?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

/// Runs one command and returns its exit code. Nothing is written when the
/// configuration fails to resolve.
pub fn run(command: &Command) -> u8 {
    let resolved = match resolve(command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let args = command.args();
    let threads = args
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_RUNTIME;
        }
    };
    let config_json = match resolved.config_json() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from(format!("out/{}", command.name())));
    let start = Instant::now();
    let outcome = pool.install(|| resolved.execute());
    let elapsed = start.elapsed().as_secs_f64();

    let (output, error, code) = match outcome {
        Ok(o) => {
            let (err, code) = if let Some(msg) = &o.invariant_failure {
                (Some(msg.clone()), EXIT_INVARIANT)
            } else if let Some(msg) = &o.runtime_failure {
                (Some(msg.clone()), EXIT_RUNTIME)
            } else {
                (None, EXIT_OK)
            };
            (o, err, code)
        }
        Err(e) => (RunOutput::default(), Some(e.to_string()), EXIT_RUNTIME),
    };
    let status = match code {
        EXIT_OK => "ok",
        EXIT_INVARIANT => "invariant_failure",
        _ => "runtime_failure",
    };
    let manifest = RunManifest {
        command: command.name().to_string(),
        resolved_config: config_json,
        master_seed: resolved.seed(),
        seeds: output.seeds.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        threads,
        wall_clock_seconds: elapsed,
        status: status.to_string(),
        exit_code: code,
        error: error.clone(),
        failure_count: output.failures.len(),
        failures: output.failures.clone(),
        metrics: output.metrics.clone(),
        outputs: output.files.iter().map(|(n, _)| n.clone()).collect(),
    };
    if let Err(e) = write_outputs(&out_dir, &output.files, &manifest) {
        eprintln!("error: writing outputs: {e}");
        return EXIT_RUNTIME;
    }
    if let Some(msg) = error {
        eprintln!("error: {msg}");
    }
    code
}

pub fn main_from_args() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run(&cli.command))
}

//! Command-line front end: `magblock <command> [--config FILE] [--key value ...]`.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 computation
//! failure.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::error::Error;

pub use commands::{run, Command, Outcome};
pub use config::{ConfigBuilder, RunConfig, Units};
pub use output::{sci, write_tables, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "MAGBLOCK_WORKERS";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("output: {0}")]
    Io(String),
    #[error("computation failed: {0}")]
    Compute(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Compute(_) => EXIT_COMPUTE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CommandArg {
    /// g²(0) against the common detuning Δ, one file per (mode, λ)
    SweepDelta,
    /// delayed correlation g²(τ) at the configured operating point
    G2tau,
    /// g_m²(0) and populations along a trajectory from a Fock state
    Evolve,
    /// (Δ, λ) search for the deepest analytic dip
    Optimize,
    /// numeric Δ-sweeps for each pure-dephasing rate in gamma_p_list
    Dephasing,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::SweepDelta => Command::SweepDelta,
            CommandArg::G2tau => Command::G2Tau,
            CommandArg::Evolve => Command::Evolve,
            CommandArg::Optimize => Command::Optimize,
            CommandArg::Dephasing => Command::Dephasing,
        }
    }
}

const KEYS_HELP: &str = "\
Options after the command:
  --config FILE          flat `key = value` file, '#' comments
  --convergence-check    rerun at truncation 8x8 and report the change in g2
  --KEY VALUE            override any config key (also --KEY=VALUE)

Keys (rates in κ units, or Hz with units = hz; κ/2π = 1 MHz):
  units kappa_c kappa_m delta delta_c delta_m omega_b g_mb g_mc lambda theta
  drive gamma_p dim_m dim_c mode engine output delta_min delta_max n_points
  lambdas lambda_min lambda_max tau_max_us tau_points t_max_us t_points
  initial_m initial_c gamma_p_list dephasing_target propagation workers

MAGBLOCK_WORKERS overrides `workers`.";

#[derive(Parser, Debug)]
#[command(name = "magblock", version, about = "Magnon and photon blockade with magnon squeezing", after_help = KEYS_HELP)]
struct Args {
    #[arg(value_enum)]
    command: CommandArg,
    #[arg(allow_hyphen_values = true, trailing_var_arg = true, num_args = 0.., value_name = "OPTIONS")]
    rest: Vec<String>,
}

/// Parses everything after the command into a resolved config.
pub fn resolve_config(rest: &[String], workers_env: Option<&str>) -> Result<RunConfig, CliError> {
    let mut builder = ConfigBuilder::new();
    let mut config_file: Option<PathBuf> = None;
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut it = rest.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(CliError::Usage(format!("unexpected argument {arg:?}")));
        };
        if flag == "convergence-check" {
            builder.convergence_check(true);
            continue;
        }
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Usage(format!("--{flag} needs a value")))?;
                (flag.to_string(), v.clone())
            }
        };
        if key == "config" {
            config_file = Some(PathBuf::from(value));
        } else {
            overrides.push((key, value));
        }
    }
    if let Some(path) = config_file {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        builder.read_text(&text)?;
    }
    for (k, v) in &overrides {
        builder.set(k, v)?;
    }
    if let Some(w) = workers_env {
        builder.set("workers", w)?;
    }
    builder.build()
}

/// Runs one command and writes its outputs; returns the report text.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<String, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("workers: {e}")))?;
    let outcome = pool.install(|| run(command, cfg))?;
    let paths = write_tables(command.name(), cfg, &outcome.tables)?;
    let mut report = outcome.report;
    for p in paths {
        report.push_str(&format!("wrote {}\n", p.display()));
    }
    Ok(report)
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if args.rest.iter().any(|a| a == "--help" || a == "-h") {
        println!("{KEYS_HELP}");
        return EXIT_OK;
    }
    let env = std::env::var(WORKERS_ENV).ok();
    let result = resolve_config(&args.rest, env.as_deref()).and_then(|cfg| execute(args.command.into(), &cfg));
    match result {
        Ok(report) => {
            print!("{report}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("magblock: {e}");
            e.exit_code()
        }
    }
}

//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::lindblad::{DephasingTarget, NumericOptions, Propagation};
use crate::model::{SystemParams, KAPPA_OVER_2PI_HZ};
use crate::operators::{Mode, Truncation};

use super::output::sci_exact as sci;
use super::CliError;

/// Marks the end of the config block inside an output preamble.
pub const END_OF_CONFIG: &str = "end config";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Units {
    /// Rates in units of κ.
    Kappa,
    /// Rates as ordinary frequencies ν = ω/2π in Hz; κ/2π = 1 MHz.
    Hz,
}

impl Units {
    fn label(self) -> &'static str {
        match self {
            Units::Kappa => "kappa",
            Units::Hz => "hz",
        }
    }

    fn scale(self) -> f64 {
        match self {
            Units::Kappa => 1.0,
            Units::Hz => 1.0 / KAPPA_OVER_2PI_HZ,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeSelection {
    Magnon,
    Cavity,
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeSelection::Magnon => vec![Mode::Magnon],
            ModeSelection::Cavity => vec![Mode::Cavity],
            ModeSelection::Both => vec![Mode::Magnon, Mode::Cavity],
        }
    }

    fn label(self) -> &'static str {
        match self {
            ModeSelection::Magnon => "magnon",
            ModeSelection::Cavity => "cavity",
            ModeSelection::Both => "both",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineSelection {
    Analytic,
    Numeric,
    Both,
}

impl EngineSelection {
    pub fn analytic(self) -> bool {
        matches!(self, EngineSelection::Analytic | EngineSelection::Both)
    }

    pub fn numeric(self) -> bool {
        matches!(self, EngineSelection::Numeric | EngineSelection::Both)
    }

    fn label(self) -> &'static str {
        match self {
            EngineSelection::Analytic => "analytic",
            EngineSelection::Numeric => "numeric",
            EngineSelection::Both => "both",
        }
    }
}

/// Fully resolved settings of one invocation. Rates are stored in κ units
/// whatever `units` says; `units` only governs how inputs are read.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub units: Units,
    pub params: SystemParams<f64>,
    pub truncation: Truncation,
    pub mode: ModeSelection,
    pub engine: EngineSelection,
    pub output: PathBuf,
    pub delta_min: f64,
    pub delta_max: f64,
    pub n_points: usize,
    /// λ values for `sweep-delta`; defaults to `[params.lambda]`.
    pub lambdas: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub tau_max_us: f64,
    pub tau_points: usize,
    pub t_max_us: f64,
    pub t_points: usize,
    pub initial_m: usize,
    pub initial_c: usize,
    pub gamma_p_list: Vec<f64>,
    pub dephasing_target: DephasingTarget,
    pub propagation: Propagation,
    pub workers: usize,
    pub convergence_check: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            units: Units::Kappa,
            params: SystemParams::baseline().with_detuning(9.03).with_lambda(2e-4),
            truncation: Truncation::default(),
            mode: ModeSelection::Magnon,
            engine: EngineSelection::Both,
            output: PathBuf::from("magblock-out"),
            delta_min: -2.0,
            delta_max: 12.0,
            n_points: 200,
            lambdas: vec![2e-4],
            lambda_min: 0.0,
            lambda_max: 1e-3,
            tau_max_us: 3.0,
            tau_points: 301,
            t_max_us: 3.0,
            t_points: 301,
            initial_m: 0,
            initial_c: 0,
            gamma_p_list: vec![0.0, 0.1, 0.5, 1.0],
            dephasing_target: DephasingTarget::Cavity,
            propagation: Propagation::RungeKutta4,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            convergence_check: false,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    let x: f64 = value
        .trim()
        .parse()
        .map_err(|_| usage(format!("{key}: expected a number, got {value:?}")))?;
    if !x.is_finite() {
        return Err(usage(format!("{key}: value must be finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, value: &str) -> Result<usize, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| usage(format!("{key}: expected a non-negative integer, got {value:?}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    let items: Vec<&str> = value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(usage(format!("{key}: empty list")));
    }
    items.into_iter().map(|s| parse_f64(key, s)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(usage(format!("{key}: expected true or false, got {other:?}"))),
    }
}

/// Keys in the order they are written back out.
const KEYS: &[&str] = &[
    "units",
    "kappa_c",
    "kappa_m",
    "delta_c",
    "delta_m",
    "omega_b",
    "g_mb",
    "g_mc",
    "lambda",
    "theta",
    "drive",
    "gamma_p",
    "dim_m",
    "dim_c",
    "mode",
    "engine",
    "output",
    "delta_min",
    "delta_max",
    "n_points",
    "lambdas",
    "lambda_min",
    "lambda_max",
    "tau_max_us",
    "tau_points",
    "t_max_us",
    "t_points",
    "initial_m",
    "initial_c",
    "gamma_p_list",
    "dephasing_target",
    "propagation",
    "workers",
];

/// Accumulates `key = value` assignments; `units` is applied to rates at
/// the end so its position in the input does not matter.
#[derive(Default)]
pub struct ConfigBuilder {
    entries: Vec<(String, String)>,
    convergence_check: bool,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('-', "_");
        if key == "delta" {
            self.entries.push(("delta_c".into(), value.trim().into()));
            self.entries.push(("delta_m".into(), value.trim().into()));
            return Ok(());
        }
        if key == "convergence_check" {
            self.convergence_check = parse_bool(&key, value)?;
            return Ok(());
        }
        if !KEYS.contains(&key.as_str()) {
            return Err(usage(format!("unknown config key {key:?}")));
        }
        self.entries.push((key, value.trim().into()));
        Ok(())
    }

    /// Reads a config file body; `#` starts a comment. Inside an output
    /// preamble the block ends at the [`END_OF_CONFIG`] marker.
    pub fn read_text(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_start();
            let line = match line.strip_prefix('#') {
                Some(rest) if rest.trim() == END_OF_CONFIG => break,
                Some(_) => continue,
                None => line,
            };
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Reads the config block of a CSV preamble written by this tool.
    pub fn read_preamble(&mut self, csv: &str) -> Result<(), CliError> {
        let mut body = String::new();
        for line in csv.lines() {
            let Some(rest) = line.strip_prefix('#') else { break };
            let rest = rest.trim();
            if rest == END_OF_CONFIG {
                break;
            }
            if rest.contains('=') {
                body.push_str(rest);
                body.push('\n');
            }
        }
        self.read_text(&body)
    }

    pub fn convergence_check(&mut self, on: bool) {
        self.convergence_check = on;
    }

    pub fn build(self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        let mut lambdas_set = false;
        let mut units = Units::Kappa;
        for (k, v) in &self.entries {
            if k == "units" {
                units = match v.as_str() {
                    "kappa" => Units::Kappa,
                    "hz" => Units::Hz,
                    other => return Err(usage(format!("units: expected hz or kappa, got {other:?}"))),
                };
            }
        }
        let s = units.scale();
        cfg.units = units;
        let p = &mut cfg.params;
        for (k, v) in &self.entries {
            let rate = || parse_f64(k, v).map(|x| x * s);
            match k.as_str() {
                "units" => {}
                "kappa_c" => p.kappa_c = rate()?,
                "kappa_m" => p.kappa_m = rate()?,
                "delta_c" => p.delta_c = rate()?,
                "delta_m" => p.delta_m = rate()?,
                "omega_b" => p.omega_b = rate()?,
                "g_mb" => p.g_mb = rate()?,
                "g_mc" => p.g_mc = rate()?,
                "lambda" => p.lambda = rate()?,
                "theta" => p.theta = parse_f64(k, v)?,
                "drive" => p.drive = rate()?,
                "gamma_p" => p.gamma_p = rate()?,
                "dim_m" => cfg.truncation.dim_m = parse_usize(k, v)?,
                "dim_c" => cfg.truncation.dim_c = parse_usize(k, v)?,
                "mode" => {
                    cfg.mode = match v.as_str() {
                        "magnon" => ModeSelection::Magnon,
                        "cavity" => ModeSelection::Cavity,
                        "both" => ModeSelection::Both,
                        other => return Err(usage(format!("mode: expected magnon, cavity or both, got {other:?}"))),
                    }
                }
                "engine" => {
                    cfg.engine = match v.as_str() {
                        "analytic" => EngineSelection::Analytic,
                        "numeric" => EngineSelection::Numeric,
                        "both" => EngineSelection::Both,
                        other => {
                            return Err(usage(format!("engine: expected analytic, numeric or both, got {other:?}")))
                        }
                    }
                }
                "output" => cfg.output = PathBuf::from(v),
                "delta_min" => cfg.delta_min = rate()?,
                "delta_max" => cfg.delta_max = rate()?,
                "n_points" => cfg.n_points = parse_usize(k, v)?,
                "lambdas" => {
                    cfg.lambdas = parse_list(k, v)?.into_iter().map(|x| x * s).collect();
                    lambdas_set = true;
                }
                "lambda_min" => cfg.lambda_min = rate()?,
                "lambda_max" => cfg.lambda_max = rate()?,
                "tau_max_us" => cfg.tau_max_us = parse_f64(k, v)?,
                "tau_points" => cfg.tau_points = parse_usize(k, v)?,
                "t_max_us" => cfg.t_max_us = parse_f64(k, v)?,
                "t_points" => cfg.t_points = parse_usize(k, v)?,
                "initial_m" => cfg.initial_m = parse_usize(k, v)?,
                "initial_c" => cfg.initial_c = parse_usize(k, v)?,
                "gamma_p_list" => cfg.gamma_p_list = parse_list(k, v)?.into_iter().map(|x| x * s).collect(),
                "dephasing_target" => {
                    cfg.dephasing_target = match v.as_str() {
                        "cavity" => DephasingTarget::Cavity,
                        "magnon" => DephasingTarget::Magnon,
                        other => return Err(usage(format!("dephasing_target: expected cavity or magnon, got {other:?}"))),
                    }
                }
                "propagation" => {
                    cfg.propagation = match v.as_str() {
                        "rk4" => Propagation::RungeKutta4,
                        "expm" => Propagation::MatrixExponential,
                        other => return Err(usage(format!("propagation: expected rk4 or expm, got {other:?}"))),
                    }
                }
                "workers" => cfg.workers = parse_usize(k, v)?,
                _ => unreachable!("key list checked in set"),
            }
        }
        if !lambdas_set {
            cfg.lambdas = vec![cfg.params.lambda];
        }
        cfg.convergence_check = self.convergence_check;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate().map_err(|e| usage(e.to_string()))?;
        if self.output.as_os_str().is_empty() {
            return Err(usage("output: path must be non-empty"));
        }
        if !(self.delta_max > self.delta_min) {
            return Err(usage("delta_max must exceed delta_min"));
        }
        if self.n_points < 2 {
            return Err(usage("n_points must be at least 2"));
        }
        if !(self.lambda_max >= self.lambda_min) || self.lambda_min < 0.0 {
            return Err(usage("lambda bounds must satisfy 0 ≤ lambda_min ≤ lambda_max"));
        }
        if !(self.tau_max_us > 0.0) || self.tau_points < 2 {
            return Err(usage("tau grid needs tau_max_us > 0 and tau_points ≥ 2"));
        }
        if !(self.t_max_us > 0.0) || self.t_points < 2 {
            return Err(usage("time grid needs t_max_us > 0 and t_points ≥ 2"));
        }
        if self.gamma_p_list.iter().any(|&g| g < 0.0) {
            return Err(usage("gamma_p_list entries must be non-negative"));
        }
        if self.truncation.dim_m < 3 || self.truncation.dim_c < 3 {
            return Err(usage("dim_m and dim_c must be at least 3"));
        }
        if self.initial_m >= self.truncation.dim_m || self.initial_c >= self.truncation.dim_c {
            return Err(usage("initial Fock state lies outside the truncation"));
        }
        if self.workers == 0 {
            return Err(usage("workers must be at least 1"));
        }
        Ok(())
    }

    pub fn numeric_options(&self) -> NumericOptions {
        NumericOptions {
            truncation: self.truncation,
            dephasing: None,
            propagation: self.propagation,
        }
    }

    /// The resolved config as `key = value` lines, rates in κ units.
    /// `workers` is left out because it cannot change the data.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let list = |xs: &[f64]| xs.iter().map(|&x| sci(x)).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("units", Units::Kappa.label().into());
        kv("kappa_c", sci(p.kappa_c));
        kv("kappa_m", sci(p.kappa_m));
        kv("delta_c", sci(p.delta_c));
        kv("delta_m", sci(p.delta_m));
        kv("omega_b", sci(p.omega_b));
        kv("g_mb", sci(p.g_mb));
        kv("g_mc", sci(p.g_mc));
        kv("lambda", sci(p.lambda));
        kv("theta", sci(p.theta));
        kv("drive", sci(p.drive));
        kv("gamma_p", sci(p.gamma_p));
        kv("dim_m", self.truncation.dim_m.to_string());
        kv("dim_c", self.truncation.dim_c.to_string());
        kv("mode", self.mode.label().into());
        kv("engine", self.engine.label().into());
        kv("output", self.output.display().to_string());
        kv("delta_min", sci(self.delta_min));
        kv("delta_max", sci(self.delta_max));
        kv("n_points", self.n_points.to_string());
        kv("lambdas", list(&self.lambdas));
        kv("lambda_min", sci(self.lambda_min));
        kv("lambda_max", sci(self.lambda_max));
        kv("tau_max_us", sci(self.tau_max_us));
        kv("tau_points", self.tau_points.to_string());
        kv("t_max_us", sci(self.t_max_us));
        kv("t_points", self.t_points.to_string());
        kv("initial_m", self.initial_m.to_string());
        kv("initial_c", self.initial_c.to_string());
        kv("gamma_p_list", list(&self.gamma_p_list));
        kv(
            "dephasing_target",
            match self.dephasing_target {
                DephasingTarget::Cavity => "cavity".into(),
                DephasingTarget::Magnon => "magnon".into(),
            },
        );
        kv(
            "propagation",
            match self.propagation {
                Propagation::RungeKutta4 => "rk4".into(),
                Propagation::MatrixExponential => "expm".into(),
            },
        );
        kv("convergence_check", self.convergence_check.to_string());
        out
    }
}

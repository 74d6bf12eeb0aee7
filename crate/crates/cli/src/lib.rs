//! Command-line runner: argument types, config-file merging, range parsing
//! and the mapping from failures to exit codes. The subcommands live in
//! [`commands`].

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use openness_core::quadrature::Region;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub mod commands;
pub mod output;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_AUDIT: i32 = 3;
pub const EXIT_DIVERGENT: i32 = 4;

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "OPENNESS_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "openness", version, about = "Weighted Bergman norms, radial weight sequences and dbar-approximation audits")]
pub struct Cli {
    /// JSON file whose keys override the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Squared norm of a monomial or a finite series under a radial weight.
    Norm(NormArgs),
    #[command(subcommand)]
    Integrability(IntegrabilityCommand),
    #[command(subcommand)]
    Counterexample(CounterexampleCommand),
    #[command(subcommand)]
    Approx(ApproxCommand),
    #[command(subcommand)]
    Bounds(BoundsCommand),
}

#[derive(Debug, Subcommand)]
pub enum IntegrabilityCommand {
    /// Threshold, dyadic and quadrature verdicts for `N log⁺‖z‖` weights.
    Sweep(SweepArgs),
}

#[derive(Debug, Subcommand)]
pub enum CounterexampleCommand {
    /// Builds the weight sequence, levels and series and writes the instance.
    Build(BuildArgs),
    /// Re-derives and certifies a stored instance.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum ApproxCommand {
    /// Cutoff-and-correct approximants over a grid of (j, N) cells.
    Run(ApproxArgs),
}

#[derive(Debug, Subcommand)]
pub enum BoundsCommand {
    /// Minimizes the Hörmander coefficient in t.
    Coefficient(CoefficientArgs),
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormArgs {
    /// Radial weight JSON (`{"n": .., "terms": [..], "breakpoints": [..]}`).
    #[arg(long)]
    pub weight: Option<PathBuf>,
    /// Multi-index such as `1,0`.
    #[arg(long, conflicts_with = "f")]
    pub alpha: Option<String>,
    /// Series JSON (`{"n": .., "terms": [{"alpha": [..], "coeff": ..}]}`).
    #[arg(long)]
    pub f: Option<PathBuf>,
    /// `whole`, `ball:T`, `exterior:T` or `annulus:A:B`, in t = log‖z‖.
    #[arg(long, default_value = "whole")]
    pub region: String,
    #[arg(long, default_value = "norm.json")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Degree range of α, e.g. `0..3` (inclusive) or `0,2,5`.
    #[arg(long, default_value = "0..3")]
    pub alpha: String,
    /// Integer slope range, e.g. `1..9`.
    #[arg(long = "N", default_value = "1..9")]
    #[serde(rename = "N")]
    pub big_n: String,
    /// Number of dyadic shells summed per cell.
    #[arg(long, default_value_t = 40)]
    pub dyadic_terms: usize,
    #[arg(long, default_value = "sweep.json")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = openness_core::counterexample::DEFAULT_K_MAX)]
    pub kmax: usize,
    #[arg(long, default_value = "instance.json")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// Instance written by `counterexample build`.
    pub instance: Option<PathBuf>,
    /// Largest relative drift allowed when re-deriving the stored levels.
    #[arg(long, default_value_t = 1e-9)]
    pub drift_tol: f64,
    #[arg(long, default_value = "verify.json")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxArgs {
    /// Series JSON for f.
    #[arg(long)]
    pub f: Option<PathBuf>,
    /// Weight sequence JSON, or a counterexample instance.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long = "N", default_value = "2,3,4")]
    #[serde(rename = "N")]
    pub big_n: String,
    #[arg(long, default_value = "3,4,5")]
    pub j: String,
    /// Seed for the Cauchy–Riemann sample offsets.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "approx.json")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientArgs {
    #[arg(long, default_value = "0.1,0.25,0.5,0.9")]
    pub r: String,
    /// Relative tolerance for the searched minimum against the closed form.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value = "coefficient.json")]
    pub out: PathBuf,
}

/// Bad flags, bad config files or unreadable inputs.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Overlays the keys of `overrides` (a JSON object) onto `args`.
pub fn merge_config<T: Serialize + DeserializeOwned>(args: &T, overrides: &Value) -> anyhow::Result<T> {
    let Value::Object(extra) = overrides else {
        return Err(config_err("config file must hold a JSON object"));
    };
    let mut base = serde_json::to_value(args)?;
    let obj = base.as_object_mut().expect("argument records serialize to objects");
    for (k, v) in extra {
        obj.insert(k.clone(), v.clone());
    }
    serde_json::from_value(base).map_err(|e| config_err(format!("config file: {e}")))
}

pub fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("reading {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("parsing {what} {}: {e}", path.display())))
}

pub fn require<'a, T>(v: &'a Option<T>, flag: &str) -> anyhow::Result<&'a T> {
    v.as_ref().ok_or_else(|| config_err(format!("missing --{flag}")))
}

/// Parses `a..b` (inclusive), `a..=b`, single values and comma-separated
/// mixtures of these. Empty ranges are rejected.
pub fn parse_int_list(s: &str) -> anyhow::Result<Vec<i64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if part.is_empty() {
            return Err(config_err(format!("empty item in list {s:?}")));
        }
        if let Some((a, b)) = part.split_once("..") {
            let b = b.strip_prefix('=').unwrap_or(b);
            let parse = |x: &str| x.trim().parse::<i64>().map_err(|_| config_err(format!("bad range bound {x:?} in {s:?}")));
            let (a, b) = (parse(a)?, parse(b)?);
            if a > b {
                return Err(config_err(format!("empty range {part:?}")));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| config_err(format!("bad integer {part:?}")))?);
        }
    }
    Ok(out)
}

/// [`parse_int_list`] restricted to values `≥ min` that fit `T`.
pub fn parse_list_at_least<T: TryFrom<i64>>(s: &str, min: i64, flag: &str) -> anyhow::Result<Vec<T>> {
    parse_int_list(s)?
        .into_iter()
        .map(|v| {
            if v < min {
                return Err(config_err(format!("--{flag} values must be ≥ {min}, got {v}")));
            }
            T::try_from(v).map_err(|_| config_err(format!("--{flag} value {v} out of range")))
        })
        .collect()
}

pub fn parse_float_list(s: &str) -> anyhow::Result<Vec<f64>> {
    let out = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| config_err(format!("bad number {p:?}")))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(config_err("empty list"));
    }
    Ok(out)
}

pub fn parse_region(s: &str) -> anyhow::Result<Region> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |x: &str| x.parse::<f64>().map_err(|_| config_err(format!("bad region bound {x:?}")));
    let region = match parts.as_slice() {
        ["whole"] => Region::WholeSpace,
        ["ball", t] => Region::Ball { t_max: num(t)? },
        ["exterior", t] => Region::Exterior { t_min: num(t)? },
        ["annulus", a, b] => Region::Annulus {
            t_min: num(a)?,
            t_max: num(b)?,
        },
        _ => return Err(config_err(format!("unknown region {s:?}"))),
    };
    region.bounds().map_err(|e| config_err(e.to_string()))?;
    Ok(region)
}

/// Result of a subcommand that ran to completion and wrote its reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    AuditFailed,
    Divergent,
}

impl Outcome {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::AuditFailed
        }
    }

    pub fn code(self) -> i32 {
        match self {
            Outcome::Pass => EXIT_OK,
            Outcome::AuditFailed => EXIT_AUDIT,
            Outcome::Divergent => EXIT_DIVERGENT,
        }
    }
}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    use openness_core::Error as E;
    for cause in err.chain() {
        if cause.is::<ConfigError>() || cause.is::<serde_json::Error>() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidArgument(_) | E::InvalidProfile(_) | E::Json(_) => EXIT_CONFIG,
                E::AuditFailed(_) | E::QuadratureFailed { .. } => EXIT_AUDIT,
                E::Divergent(_) => EXIT_DIVERGENT,
            };
        }
    }
    EXIT_IO
}

/// Applies the config overlay, if any, and dispatches.
pub fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let overrides: Option<Value> = cli.config.as_deref().map(|p| read_json(p, "config")).transpose()?;
    fn merged<T: Serialize + DeserializeOwned + Clone>(args: &T, o: &Option<Value>) -> anyhow::Result<T> {
        match o {
            Some(v) => merge_config(args, v),
            None => Ok(args.clone()),
        }
    }
    match &cli.command {
        Command::Norm(a) => commands::norm(&merged(a, &overrides)?),
        Command::Integrability(IntegrabilityCommand::Sweep(a)) => commands::sweep(&merged(a, &overrides)?),
        Command::Counterexample(CounterexampleCommand::Build(a)) => commands::build(&merged(a, &overrides)?),
        Command::Counterexample(CounterexampleCommand::Verify(a)) => commands::verify(&merged(a, &overrides)?),
        Command::Approx(ApproxCommand::Run(a)) => commands::approx(&merged(a, &overrides)?),
        Command::Bounds(BoundsCommand::Coefficient(a)) => commands::coefficient(&merged(a, &overrides)?),
    }
}

/// Sizes the global rayon pool from [`WORKERS_ENV`] when set.
pub fn init_workers() -> anyhow::Result<()> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| config_err(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

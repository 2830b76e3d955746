use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "gpwz", version, about = "Whitham-zone asymptotics and boundary-value solves for the GP special solution")]
pub struct Cli {
    /// key=value file presetting flags of the chosen subcommand; flags on
    /// the command line win
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the oscillation zone and write the modulation table
    Modulation(ModulationArgs),
    /// Sample the leading-order asymptotic profile
    Asymptotic(AsymptoticArgs),
    /// Solve the fourth-order ODE at fixed t by continuation
    Bvp(BvpArgs),
    /// Fit the phase shift (and the decay exponent for three or more solutions)
    Fit(FitArgs),
    /// Run invariant gates
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct ModulationArgs {
    /// Number of table rows (at least 16)
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path; defaults to the output with extension .manifest.json
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AsymptoticArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    /// Modulation table; swept on the fly when absent
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Rows of the on-the-fly sweep
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    #[arg(long, default_value_t = std::f64::consts::PI, allow_hyphen_values = true)]
    pub s0: f64,
    /// Sample in physical x instead of scaled z
    #[arg(long)]
    pub physical: bool,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub to: f64,
    #[arg(long, default_value_t = 2001)]
    pub points: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BvpArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub xmin: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub xmax: Option<f64>,
    /// second or fourth
    #[arg(long)]
    pub stencil: Option<String>,
    /// Comma-separated continuation waypoints ending at --t
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    pub t_path: Option<Vec<f64>>,
    /// First continuation step in t
    #[arg(long)]
    pub dt: Option<f64>,
    /// First trial step of the Newton line search
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub max_newton: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Solution CSV with its .meta.json sidecar; repeat for an exponent fit
    #[arg(long = "solution", required = true)]
    pub solutions: Vec<PathBuf>,
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    /// z_min,z_max
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', default_values_t = [-1.2, -0.2])]
    pub window: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// (s, misfit) scan of the first solution
    #[arg(long)]
    pub scan_out: Option<PathBuf>,
    /// (z, U_numeric - U_asymptotic) of the first solution at the fitted shift
    #[arg(long)]
    pub diff_out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// specfun, outer, modulation, asymptotics, bvp, phase_fit or all
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Report JSON; printed to standard output when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Path of the `--config` value in raw arguments, if any.
fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let k = k.trim().trim_start_matches("--").replace('_', "-");
        if k.is_empty() || k == "config" {
            return Err(format!("config line {}: bad key {k:?}", i + 1));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

/// Append config entries whose flag does not already appear on the command line.
pub fn merge_config(mut args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    for (key, value) in parse_config(&text)? {
        let flag = format!("--{key}");
        let given = args
            .iter()
            .any(|a| a == &flag || a.starts_with(&format!("{flag}=")));
        if given {
            continue;
        }
        match value.as_str() {
            "true" => args.push(flag),
            "false" => {}
            _ => args.push(format!("{flag}={value}")),
        }
    }
    Ok(args)
}

pub fn parse(raw: Vec<OsString>) -> Result<Cli, clap::Error> {
    let strings: Vec<String> = raw.iter().map(|s| s.to_string_lossy().into_owned()).collect();
    let merged = merge_config(strings).map_err(|m| {
        clap::Error::raw(clap::error::ErrorKind::Io, format!("{m}\n"))
    })?;
    Cli::try_parse_from(merged)
}

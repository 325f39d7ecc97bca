//! Command-line and JSON configuration records. Every record parses from
//! flags and from a config file, and is echoed back into output headers.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use gkpsim::Protocol;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "gkpsim", version, about = "GKP grid-state preparation and analysis experiments")]
pub struct Cli {
    /// Worker threads (default: logical cores). GKPSIM_THREADS takes precedence.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the adaptive feedback-phase lookup table.
    Table(TableArgs),
    /// Survival curve P(δθ > ε) from sampled runs.
    Survey(SurveyArgs),
    /// Exact distribution of the corrected shift error rate.
    Histogram(HistogramArgs),
    /// Outcome-averaged photon numbers for M = 0..=rounds.
    Photons(PhotonsArgs),
    /// Squeezed-vacuum error and photon number across a dB sweep.
    Squeeze(SqueezeArgs),
    /// Displacement expansion of the damping operator.
    Expand(ExpandArgs),
    /// Alternating Steane rounds under bounded shifts.
    Qec(QecArgs),
    /// Controlled-displacement pulse report.
    Pulse(PulseArgs),
    /// Write every figure dataset into a directory.
    ReproduceAll(ReproduceArgs),
    /// Run an experiment described by a JSON config file.
    Run(RunArgs),
}

/// JSON form: `{"command": "histogram", "protocol": "ape", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Table(TableArgs),
    Survey(SurveyArgs),
    Histogram(HistogramArgs),
    Photons(PhotonsArgs),
    Squeeze(SqueezeArgs),
    Expand(ExpandArgs),
    Qec(QecArgs),
    Pulse(PulseArgs),
    ReproduceAll(ReproduceArgs),
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.parse::<Protocol>().map_err(|e| e.to_string())
}

fn d_seed() -> u64 {
    1
}
fn d_samples() -> usize {
    100_000
}
fn d_bin() -> f64 {
    0.002
}
fn d_delta() -> f64 {
    0.2
}
fn d_sweep() -> String {
    "0:20:0.1".into()
}
fn d_chi() -> f64 {
    2.5
}
fn d_omega_r() -> f64 {
    10.0
}
fn d_gamma() -> f64 {
    2.5066
}
fn d_measure() -> f64 {
    300.0
}
fn d_dir() -> PathBuf {
    PathBuf::from("figures")
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableArgs {
    #[arg(long)]
    pub depth: usize,
    /// Output path; `-` or omitted writes to stdout.
    #[arg(long)]
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyArgs {
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: Protocol,
    #[arg(long)]
    pub rounds: usize,
    #[arg(long, default_value_t = d_samples())]
    #[serde(default = "d_samples")]
    pub samples: usize,
    #[arg(long, default_value_t = d_seed())]
    #[serde(default = "d_seed")]
    pub seed: u64,
    /// Feedback table CSV; built on the fly when omitted.
    #[arg(long)]
    #[serde(default)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramArgs {
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: Protocol,
    #[arg(long)]
    pub rounds: usize,
    #[arg(long, default_value_t = d_bin())]
    #[serde(default = "d_bin")]
    pub bin: f64,
    #[arg(long)]
    #[serde(default)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonsArgs {
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: Protocol,
    #[arg(long)]
    pub rounds: usize,
    #[arg(long, default_value_t = d_delta())]
    #[serde(default = "d_delta")]
    pub delta: f64,
    #[arg(long)]
    #[serde(default)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezeArgs {
    /// `start:stop:step` in dB.
    #[arg(long, default_value_t = d_sweep())]
    #[serde(default = "d_sweep")]
    pub sweep_db: String,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandArgs {
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub order: usize,
    #[arg(long)]
    pub nmax: usize,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QecArgs {
    #[arg(long)]
    pub rounds: usize,
    #[arg(long)]
    pub bound: f64,
    #[arg(long, default_value_t = d_seed())]
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseArgs {
    /// Dispersive shift χ/2π in MHz.
    #[arg(long, default_value_t = d_chi())]
    #[serde(default = "d_chi")]
    pub chi_mhz: f64,
    /// Cavity frequency ω_r/2π in GHz.
    #[arg(long, default_value_t = d_omega_r())]
    #[serde(default = "d_omega_r")]
    pub omega_r_ghz: f64,
    /// Resonant displacement γ₊.
    #[arg(long, default_value_t = d_gamma())]
    #[serde(default = "d_gamma")]
    pub target_gamma: f64,
    /// Qubit readout time for the timing budget, in ns.
    #[arg(long, default_value_t = d_measure())]
    #[serde(default = "d_measure")]
    pub measure_ns: f64,
    #[arg(long)]
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproduceArgs {
    #[arg(long, default_value_os_t = d_dir())]
    #[serde(default = "d_dir")]
    pub dir: PathBuf,
    #[arg(long, default_value_t = d_seed())]
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[arg(long, default_value_t = d_samples())]
    #[serde(default = "d_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}

fn positive(field: &'static str, x: f64) -> CliResult<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(field, format!("{x} must be positive and finite")))
    }
}

fn delta_range(field: &'static str, x: f64) -> CliResult<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(CliError::config(field, format!("{x} must lie in (0, 1]")))
    }
}

fn rounds_for(protocol: Protocol, rounds: usize) -> CliResult<()> {
    if protocol == Protocol::Nonadaptive && rounds % 2 == 1 {
        return Err(CliError::config("rounds", format!("pe needs an even round count, got {rounds}")));
    }
    if rounds == 0 {
        return Err(CliError::config("rounds", "must be at least 1"));
    }
    Ok(())
}

/// `start:stop:step` with `0 ≤ start ≤ stop` and `step > 0`.
pub fn parse_sweep(s: &str) -> CliResult<(f64, f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some(&[a, b, step]) if a >= 0.0 && b >= a && step > 0.0 && b.is_finite() => Ok((a, b, step)),
        _ => Err(CliError::config("sweep_db", format!("`{s}` is not start:stop:step with 0 ≤ start ≤ stop, step > 0"))),
    }
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Table(_) => "table",
            Self::Survey(_) => "survey",
            Self::Histogram(_) => "histogram",
            Self::Photons(_) => "photons",
            Self::Squeeze(_) => "squeeze",
            Self::Expand(_) => "expand",
            Self::Qec(_) => "qec",
            Self::Pulse(_) => "pulse",
            Self::ReproduceAll(_) => "reproduce-all",
        }
    }

    /// Field-level range checks, run before any work starts.
    pub fn validate(&self) -> CliResult<()> {
        match self {
            Self::Table(a) => {
                if a.depth == 0 {
                    return Err(CliError::config("depth", "must be at least 1"));
                }
            }
            Self::Survey(a) => {
                rounds_for(a.protocol, a.rounds)?;
                if a.samples == 0 {
                    return Err(CliError::config("samples", "must be at least 1"));
                }
            }
            Self::Histogram(a) => {
                rounds_for(a.protocol, a.rounds)?;
                if !(a.bin > 0.0 && a.bin <= 0.1) {
                    return Err(CliError::config("bin", format!("{} must lie in (0, 0.1]", a.bin)));
                }
            }
            Self::Photons(a) => {
                rounds_for(a.protocol, a.rounds)?;
                delta_range("delta", a.delta)?;
                if a.protocol == Protocol::Standard {
                    return Err(CliError::config("protocol", "photon averages cover pe and ape only"));
                }
            }
            Self::Squeeze(a) => {
                parse_sweep(&a.sweep_db)?;
            }
            Self::Expand(a) => {
                positive("delta", a.delta)?;
                if a.order == 0 || a.order % 2 == 0 {
                    return Err(CliError::config("order", format!("{} must be an odd positive integer", a.order)));
                }
            }
            Self::Qec(a) => {
                if !(a.bound >= 0.0 && a.bound.is_finite()) {
                    return Err(CliError::config("bound", format!("{} must be finite and non-negative", a.bound)));
                }
            }
            Self::Pulse(a) => {
                positive("chi_mhz", a.chi_mhz)?;
                positive("omega_r_ghz", a.omega_r_ghz)?;
                positive("target_gamma", a.target_gamma)?;
                if !(a.measure_ns >= 0.0 && a.measure_ns.is_finite()) {
                    return Err(CliError::config("measure_ns", "must be finite and non-negative"));
                }
                if a.omega_r_ghz * 1e3 <= a.chi_mhz {
                    return Err(CliError::config("omega_r_ghz", "cavity frequency must exceed χ"));
                }
            }
            Self::ReproduceAll(a) => {
                if a.samples == 0 {
                    return Err(CliError::config("samples", "must be at least 1"));
                }
            }
        }
        Ok(())
    }
}

impl Command {
    /// Resolves a subcommand into a config, reading the file for `run`.
    pub fn into_config(self) -> CliResult<ExperimentConfig> {
        Ok(match self {
            Self::Table(a) => ExperimentConfig::Table(a),
            Self::Survey(a) => ExperimentConfig::Survey(a),
            Self::Histogram(a) => ExperimentConfig::Histogram(a),
            Self::Photons(a) => ExperimentConfig::Photons(a),
            Self::Squeeze(a) => ExperimentConfig::Squeeze(a),
            Self::Expand(a) => ExperimentConfig::Expand(a),
            Self::Qec(a) => ExperimentConfig::Qec(a),
            Self::Pulse(a) => ExperimentConfig::Pulse(a),
            Self::ReproduceAll(a) => ExperimentConfig::ReproduceAll(a),
            Self::Run(r) => {
                let text = std::fs::read_to_string(&r.config)
                    .map_err(|e| CliError::ConfigFile(format!("{}: {e}", r.config.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::ConfigFile(format!("{}: {e}", r.config.display())))?
            }
        })
    }
}

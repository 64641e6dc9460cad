use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qcka_core::protosim::PostCadErrorFormula;
use qcka_core::NoiseModel;

use crate::config::ConfigFile;
use crate::table::Format;

pub const DEFAULT_EPSILON: f64 = 1e-36;
pub const DEFAULT_SIGNALS: u64 = 10_000_000;
pub const DEFAULT_SIMULATE_SIGNALS: u64 = 250_000;

#[derive(Debug, Parser)]
#[command(
    name = "qcka",
    version,
    about = "Finite-key rates, protocol simulation and GHZ self-tests for conference key agreement with two-block advantage distillation"
)]
pub struct Cli {
    /// Flat `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Key rate at one parameter point (m optimised unless --m is given).
    Rate(RateArgs),
    /// Rate versus Q at a fixed signal count.
    SweepQ(SweepQArgs),
    /// Rate versus total signal count at fixed noise.
    SweepN(SweepNArgs),
    /// Monte Carlo protocol trials with analytic columns alongside.
    Simulate(SimulateArgs),
    /// GHZ-lemma and sampling-bound verification battery.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    /// Number of Bobs.
    #[arg(long)]
    pub p: Option<usize>,
    /// Total signal count 2N (accepts 1e7).
    #[arg(long)]
    pub signals: Option<Count>,
    /// Per-round X error rate.
    #[arg(long)]
    pub q: Option<f64>,
    /// Z error rates: one value for every Bob, or p comma-separated values.
    /// Defaults to Q for every Bob.
    #[arg(long)]
    pub qz: Option<RateList>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Post-CAD error expression used in leak_EC.
    #[arg(long, value_enum)]
    pub error_formula: Option<FormulaArg>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the output to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Fixed test size; omitted means optimise.
    #[arg(long)]
    pub m: Option<Count>,
}

#[derive(Debug, Args)]
pub struct SweepQArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub q_from: Option<f64>,
    #[arg(long)]
    pub q_to: Option<f64>,
    #[arg(long)]
    pub q_step: Option<f64>,
    /// QZ_j = ratio_j · Q; one value for every Bob or p values (e.g. 1,0.25).
    #[arg(long)]
    pub qz_ratio: Option<RateList>,
}

#[derive(Debug, Args)]
pub struct SweepNArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub signals_from: Option<Count>,
    #[arg(long)]
    pub signals_to: Option<Count>,
    /// Geometrically spaced points between the two signal counts.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub m: Option<Count>,
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    /// Random instances per randomised check.
    #[arg(long)]
    pub samples: Option<usize>,
}

/// A non-negative integer that may be written in float notation (`1e7`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Count(pub u64);

impl FromStr for Count {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(v) = s.parse::<u64>() {
            return Ok(Count(v));
        }
        let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
        if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
            return Err(format!("`{s}` is not a non-negative integer"));
        }
        Ok(Count(v as u64))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateList(pub Vec<f64>);

impl FromStr for RateList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number")))
            .collect::<Result<Vec<_>, _>>()
            .map(RateList)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormulaArg {
    Conservative,
    Independent,
}

impl FromStr for FormulaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

impl From<FormulaArg> for PostCadErrorFormula {
    fn from(f: FormulaArg) -> Self {
        match f {
            FormulaArg::Conservative => PostCadErrorFormula::Conservative,
            FormulaArg::Independent => PostCadErrorFormula::Independent,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Flag value, else config value, else `default`.
pub fn pick<T: FromStr>(flag: Option<T>, config: &ConfigFile, key: &str, default: T) -> Result<T>
where
    T::Err: fmt::Display,
{
    Ok(match flag {
        Some(v) => v,
        None => config.get(key)?.unwrap_or(default),
    })
}

pub fn pick_opt<T: FromStr>(flag: Option<T>, config: &ConfigFile, key: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => config.get(key),
    }
}

/// Fully resolved protocol settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    pub p: usize,
    pub signals: u64,
    pub q: f64,
    pub qz: Vec<f64>,
    pub epsilon: f64,
    pub formula: PostCadErrorFormula,
}

impl Protocol {
    pub fn resolve(args: &ProtocolArgs, config: &ConfigFile, default_signals: u64) -> Result<Self> {
        let p = pick(args.p, config, "p", 1)?;
        if p == 0 {
            bail!("--p must be at least 1");
        }
        let signals = pick(args.signals, config, "signals", Count(default_signals))?.0;
        let q = pick(args.q, config, "q", 0.0)?;
        let qz = match pick_opt(args.qz.clone(), config, "qz")? {
            Some(list) => expand_per_bob(&list.0, p, "--qz")?,
            None => vec![q; p],
        };
        let epsilon = pick(args.epsilon, config, "epsilon", DEFAULT_EPSILON)?;
        let formula = pick(args.error_formula, config, "error-formula", FormulaArg::Conservative)?.into();
        Ok(Self {
            p,
            signals,
            q,
            qz,
            epsilon,
            formula,
        })
    }

    /// `N`, half the signal count.
    pub fn big_n(&self) -> Result<u64> {
        if self.signals % 2 != 0 {
            bail!("--signals must be even (it counts 2N signals)");
        }
        Ok(self.signals / 2)
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        Ok(NoiseModel::new(self.q, self.qz.clone())?)
    }
}

/// One value repeated for every Bob, or exactly `p` values.
pub fn expand_per_bob(values: &[f64], p: usize, flag: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; p]),
        n if n == p => Ok(values.to_vec()),
        n => bail!("{flag} takes 1 or {p} values, got {n}"),
    }
}

pub struct Output {
    pub seed: u64,
    pub path: Option<PathBuf>,
    pub format: Format,
}

impl Output {
    pub fn resolve(args: &OutputArgs, config: &ConfigFile) -> Result<Self> {
        Ok(Self {
            seed: pick(args.seed, config, "seed", 0)?,
            path: pick_opt(args.output.clone(), config, "output")?,
            format: pick(args.format, config, "format", Format::Csv)?,
        })
    }
}

//! Command-line front end for the finite-key conference key agreement model.

pub mod args;
pub mod config;
pub mod rate;
pub mod selftest;
pub mod simulate;
pub mod table;

use std::ffi::OsString;
use std::io::Write;

use anyhow::Result;
use clap::Parser;

use args::{pick, pick_opt, Cli, Command, Count, Output, Protocol};
use config::ConfigFile;
use table::Table;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ZERO_RATE: i32 = 2;
pub const EXIT_SELFTEST_FAILED: i32 = 3;

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match dispatch(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match &cli.command {
        Command::Rate(a) => {
            let proto = Protocol::resolve(&a.protocol, &config, args::DEFAULT_SIGNALS)?;
            let out = Output::resolve(&a.output, &config)?;
            let m = pick_opt(a.m, &config, "m")?.map(|c| c.0);
            let report = rate::rate(&proto, m)?;
            emit(&rate::report_table(std::slice::from_ref(&report)), &out, stdout)?;
            Ok(if report.rate > 0.0 { EXIT_OK } else { EXIT_ZERO_RATE })
        }
        Command::SweepQ(a) => {
            let proto = Protocol::resolve(&a.protocol, &config, args::DEFAULT_SIGNALS)?;
            let out = Output::resolve(&a.output, &config)?;
            let grid = rate::linear_grid(
                pick(a.q_from, &config, "q-from", 0.0)?,
                pick(a.q_to, &config, "q-to", 0.15)?,
                pick(a.q_step, &config, "q-step", 0.005)?,
            )?;
            let ratio = pick(a.qz_ratio.clone(), &config, "qz-ratio", args::RateList(vec![1.0]))?;
            let reports = rate::sweep_q(&proto, &grid, &ratio.0)?;
            emit(&rate::report_table(&reports), &out, stdout)?;
            Ok(EXIT_OK)
        }
        Command::SweepN(a) => {
            let proto = Protocol::resolve(&a.protocol, &config, args::DEFAULT_SIGNALS)?;
            let out = Output::resolve(&a.output, &config)?;
            let grid = rate::signal_grid(
                pick(a.signals_from, &config, "signals-from", Count(10_000))?.0,
                pick(a.signals_to, &config, "signals-to", Count(100_000_000))?.0,
                pick(a.points, &config, "points", 25)?,
            )?;
            let reports = rate::sweep_n(&proto, &grid)?;
            emit(&rate::report_table(&reports), &out, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Simulate(a) => {
            let proto = Protocol::resolve(&a.protocol, &config, args::DEFAULT_SIMULATE_SIGNALS)?;
            let out = Output::resolve(&a.output, &config)?;
            let m = pick_opt(a.m, &config, "m")?.map(|c| c.0);
            let trials = pick(a.trials, &config, "trials", 20)?;
            let sim = simulate::simulate(&proto, m, trials, out.seed)?;
            emit(&simulate::simulation_table(&proto, &sim)?, &out, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Selftest(a) => {
            let out = Output::resolve(&a.output, &config)?;
            let samples = pick(a.samples, &config, "samples", selftest::DEFAULT_SAMPLES)?;
            let results = selftest::run_selftest(samples, out.seed);
            emit(&selftest::selftest_table(&results), &out, stdout)?;
            Ok(if selftest::all_passed(&results) {
                EXIT_OK
            } else {
                EXIT_SELFTEST_FAILED
            })
        }
    }
}

/// Writes the table to stdout and, when requested, the same bytes to a file.
fn emit(table: &Table, out: &Output, stdout: &mut dyn Write) -> Result<()> {
    let bytes = table.render(out.format)?;
    if let Some(path) = &out.path {
        std::fs::write(path, &bytes)?;
    }
    stdout.write_all(&bytes)?;
    Ok(())
}

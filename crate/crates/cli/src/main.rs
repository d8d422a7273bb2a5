// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Report;
use crate::config::RunConfig;
use crate::error::CliError;

/// Periodic TFDW minimization and radial effective ground states.
#[derive(Parser, Debug)]
#[command(name = "tfdw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimize the periodic energy on one (super)cell.
    PeriodicMin(Common),
    /// Radial ground state at `mu`, or at mass `lambda` when `mu` is unset.
    Radial(Common),
    /// Mass and energy along a grid of multipliers.
    MassCurve(Common),
    /// Supercell energy gain for every entry of `c_list`.
    ScanSymmetry(Common),
    /// Bisect the symmetry-breaking threshold inside `[c_lo, c_hi]`.
    CriticalC(Common),
    /// Large-c expansion along `c_list` with the refining grid policy.
    Asymptotics(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, applied after the config file; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (default: $TFDW_OUT_DIR, else the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent scan rows and mass-curve points.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PeriodicMin(_) => "periodic-min",
            Command::Radial(_) => "radial",
            Command::MassCurve(_) => "mass-curve",
            Command::ScanSymmetry(_) => "scan-symmetry",
            Command::CriticalC(_) => "critical-c",
            Command::Asymptotics(_) => "asymptotics",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::PeriodicMin(c)
            | Command::Radial(c)
            | Command::MassCurve(c)
            | Command::ScanSymmetry(c)
            | Command::CriticalC(c)
            | Command::Asymptotics(c) => c,
        }
    }

    fn run(&self, cfg: &RunConfig) -> Result<Report, CliError> {
        match self {
            Command::PeriodicMin(_) => commands::periodic_min(cfg),
            Command::Radial(_) => commands::radial(cfg),
            Command::MassCurve(_) => commands::mass_curve_cmd(cfg),
            Command::ScanSymmetry(_) => commands::scan_symmetry(cfg),
            Command::CriticalC(_) => commands::critical(cfg),
            Command::Asymptotics(_) => commands::asymptotics(cfg),
        }
    }
}

fn build_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    for item in &common.overrides {
        cfg.apply_override(item)?;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(seed) = common.seed {
        cfg.opts.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_outputs(dir: &Path, name: &str, cfg: &RunConfig, report: &Report) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    for (file, text) in &report.files {
        std::fs::write(dir.join(file), text)?;
    }
    let summary = output::summary(name, cfg, report.failure.clone(), report.results.clone());
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    std::fs::write(dir.join(format!("{name}.json")), text)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let cfg = build_config(cli.command.common())?;
    let name = cli.command.name();
    match cli.command.run(&cfg) {
        Ok(report) => {
            write_outputs(&cfg.output_dir, name, &cfg, &report)?;
            if let Some(msg) = &report.failure {
                eprintln!("tfdw {name}: {msg}");
                return Ok(2);
            }
            Ok(0)
        }
        Err(e) if e.exit_code() == 2 => {
            let report = Report {
                results: serde_json::Value::Null,
                failure: Some(e.to_string()),
                files: Vec::new(),
            };
            write_outputs(&cfg.output_dir, name, &cfg, &report)?;
            eprintln!("tfdw {name}: {e}");
            Ok(2)
        }
        Err(e) => Err(e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("tfdw: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

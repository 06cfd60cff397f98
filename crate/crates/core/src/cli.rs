//! Command-line front end: `simulate`, `sweep`, `analyze`, `report`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input (arguments, config,
//! levels or CSV content).

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{
    critical_asrd, dataset_from_records, describe, fit_forest, gini_importances,
    write_importance_csv, write_stats_csv, ForestConfig,
};
use crate::config::{parse_levels, parse_run_config};
use crate::engine::{simulate_with, write_trace_csv, SimOptions};
use crate::experiments::{
    full_factorial, read_results_csv, run_sweep, write_results_csv, Execution, FactorLevels,
    DEFAULT_REPS,
};
use crate::params::{SimParams, DEFAULT_MAX_TICKS};
use crate::report::{read_importance_csv, render_importance_svg};

#[derive(Debug, Parser)]
#[command(
    name = "swarm-recharge",
    version,
    about = "Drone-swarm recharge coordination simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation from a key=value config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// One-row result CSV.
        #[arg(long)]
        out: PathBuf,
        /// Also write a per-tick trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the two-level full-factorial sweep.
    Sweep {
        /// `name=low,high` levels file; defaults to the built-in levels.
        #[arg(long)]
        levels: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_REPS, value_parser = clap::value_parser!(u32).range(1..))]
        reps: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_TICKS, value_parser = clap::value_parser!(u32).range(1..))]
        max_ticks: u32,
    },
    /// Summarize critical runs and rank factors by Gini importance.
    Analyze {
        /// Sweep results CSV.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        stats_out: PathBuf,
        #[arg(long)]
        importance_out: PathBuf,
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
        trees: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Render an importance CSV as an SVG bar chart.
    Report {
        #[arg(long)]
        importance: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Io(m) => m,
        }
    }
}

fn invalid(err: impl std::fmt::Display) -> Failure {
    Failure::Invalid(err.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_with(
    path: &Path,
    fill: impl FnOnce(&mut Vec<u8>) -> io::Result<()>,
) -> Result<(), Failure> {
    let mut buf = Vec::new();
    fill(&mut buf).map_err(|e| Failure::Io(e.to_string()))?;
    fs::write(path, buf).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

pub const SIMULATE_HEADER: &str = "m,k,up,lw,bc,sd,qty,bg,b,seed,ticks_run,remaining,asrd,critical";

fn cmd_simulate(config: &Path, seed: u64, out: &Path, trace: Option<&Path>) -> Result<(), Failure> {
    let params = SimParams {
        seed,
        ..parse_run_config(&read(config)?).map_err(invalid)?
    };
    params.validate().map_err(invalid)?;
    let options = SimOptions {
        trace: trace.is_some(),
        positions: false,
    };
    let result = simulate_with(&params, options).map_err(invalid)?;
    let p = &params;
    write_with(out, |buf| {
        writeln!(buf, "{SIMULATE_HEADER}")?;
        writeln!(
            buf,
            "{},{},{},{},{},{},{},{},{},{},{},{},{:.6},{}",
            p.m,
            p.k,
            p.up,
            p.lw,
            p.bc,
            p.sd,
            p.qty,
            p.bg,
            p.b,
            p.seed,
            result.ticks_run,
            result.remaining,
            result.asrd,
            u8::from(result.asrd < 1.0)
        )
    })?;
    if let (Some(path), Some(rows)) = (trace, result.trace.as_deref()) {
        write_with(path, |buf| write_trace_csv(buf, rows))?;
    }
    eprintln!(
        "remaining {}/{} after {} ticks (asrd {:.6})",
        result.remaining, p.qty, result.ticks_run, result.asrd
    );
    Ok(())
}

fn cmd_sweep(
    levels: Option<&Path>,
    reps: u32,
    seed: u64,
    out: &Path,
    workers: usize,
    max_ticks: u32,
) -> Result<(), Failure> {
    let levels = match levels {
        Some(path) => parse_levels(&read(path)?).map_err(invalid)?,
        None => FactorLevels::default(),
    };
    let mut design = full_factorial(&levels);
    for point in &mut design {
        point.params.max_ticks = max_ticks;
    }
    let records =
        run_sweep(&design, reps, seed, Execution::with_workers(workers)).map_err(invalid)?;
    write_with(out, |buf| write_results_csv(buf, &records))?;
    let critical = records.iter().filter(|r| r.critical).count();
    eprintln!(
        "{} runs over {} design points, {critical} critical",
        records.len(),
        design.len()
    );
    Ok(())
}

fn cmd_analyze(
    input: &Path,
    stats_out: &Path,
    importance_out: &Path,
    trees: u64,
    seed: u64,
) -> Result<(), Failure> {
    let records = read_results_csv(read(input)?.as_bytes()).map_err(invalid)?;
    let critical = critical_asrd(&records);
    let stats = if critical.is_empty() {
        eprintln!(
            "warning: no critical runs (asrd < 1) in {}",
            input.display()
        );
        None
    } else {
        Some(describe(&critical).map_err(invalid)?)
    };
    write_with(stats_out, |buf| write_stats_csv(buf, stats.as_ref()))?;

    let data = dataset_from_records(&records).map_err(invalid)?;
    let cfg = ForestConfig {
        n_trees: trees as usize,
        seed,
        ..ForestConfig::default()
    };
    let forest = fit_forest(&data, &cfg).map_err(invalid)?;
    let report = gini_importances(&forest);
    write_with(importance_out, |buf| write_importance_csv(buf, &report))?;
    eprintln!(
        "{} critical of {} runs; top factors: {}",
        critical.len(),
        records.len(),
        report.top(3).join(", ")
    );
    Ok(())
}

fn cmd_report(importance: &Path, out: &Path) -> Result<(), Failure> {
    let rows = read_importance_csv(read(importance)?.as_bytes()).map_err(invalid)?;
    let svg = render_importance_svg(&rows);
    write_with(out, |buf| buf.write_all(svg.as_bytes()))
}

pub fn execute(cli: Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            trace,
        } => cmd_simulate(config, *seed, out, trace.as_deref()),
        Command::Sweep {
            levels,
            reps,
            seed,
            out,
            workers,
            max_ticks,
        } => cmd_sweep(levels.as_deref(), *reps, *seed, out, *workers, *max_ticks),
        Command::Analyze {
            input,
            stats_out,
            importance_out,
            trees,
            seed,
        } => cmd_analyze(input, stats_out, importance_out, *trees, *seed),
        Command::Report { importance, out } => cmd_report(importance, out),
    };
    match outcome {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            failure.code()
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(err) => {
            let _ = err.print();
            err.exit_code()
        }
    }
}

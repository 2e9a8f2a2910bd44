use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use heatctl::{emit_report, run_experiment, Command, ExperimentConfig, OUT_DIR_ENV};

/// Nonnegative control experiments for the 1D quasilinear heat equation.
#[derive(Debug, Parser)]
#[command(name = "heatctl", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Flat TOML configuration; defaults are used for missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config and the environment).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized probes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of interior grid points.
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,
    /// Only print failures.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Sub {
    /// Steady state for a constant control.
    Steady,
    /// Path of steady states between two constant controls.
    Path,
    /// Stair-case control between two steady states.
    Staircase,
    /// Tracking of a moving target after free stabilization.
    Track,
    /// Minimal-time certificates and the constrained-time search.
    Mintime,
    /// Empirical weighted observability ratios.
    Observability,
    /// Full invariant suite.
    Validate,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Steady => Command::Steady,
            Sub::Path => Command::Path,
            Sub::Staircase => Command::Staircase,
            Sub::Track => Command::Track,
            Sub::Mintime => Command::Mintime,
            Sub::Observability => Command::Observability,
            Sub::Validate => Command::Validate,
        }
    }
}

const EXIT_CHECKS_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECKS_FAILED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let command = Command::from(cli.command);
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.grid_n {
        cfg.n = n;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| (!cfg.out_dir.is_empty()).then(|| PathBuf::from(&cfg.out_dir)))
        .unwrap_or_else(|| PathBuf::from("out").join(command.as_str()));
    let resolved = cfg.to_toml()?;
    let started = Instant::now();
    let report = run_experiment(command, &cfg)?;
    let files = emit_report(&report, Some(&resolved), &out).with_context(|| format!("writing artifacts to {}", out.display()))?;
    let passed = report.passed();
    if !cli.quiet {
        for c in &report.checks {
            println!("{} {:<48} {:>24} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, format!("{:e}", c.value), c.rule);
        }
        for f in &files {
            println!("wrote {}", f.display());
        }
        println!("{} in {:.2?}", if passed { "all checks passed" } else { "checks failed" }, started.elapsed());
    }
    for c in report.failures() {
        eprintln!("FAIL {}: {:e} (rule {}) {}", c.name, c.value, c.rule, c.detail);
    }
    Ok(passed)
}

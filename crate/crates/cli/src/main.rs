use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fermon_cli::analysis::{self, FitKind, FitSpec};
use fermon_cli::manifest::Manifest;
use fermon_cli::table::ResultTable;
use fermon_cli::{simulate, CliError, RunConfig, SimulateOptions};

/// Monitored free-fermion and interacting chains: simulate, fit, report.
#[derive(Parser)]
#[command(name = "fermon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep described by a TOML config.
    Simulate {
        /// Run config. Optional with --resume, where the stored config is used.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Continue an interrupted run in this directory.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Worker threads (1 runs sequentially).
        #[arg(long)]
        workers: Option<usize>,
        /// Override ensemble.master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Stop after this many points.
        #[arg(long)]
        max_points: Option<usize>,
    },
    /// Fit a results table.
    Fit {
        #[arg(long)]
        table: PathBuf,
        #[arg(long, value_enum, default_value = "scaling")]
        kind: FitKind,
        #[arg(long)]
        observable: Option<String>,
        /// Hold the exponent b fixed.
        #[arg(long)]
        fix_b: Option<f64>,
        /// Largest rate entering the L0(gamma) power law.
        #[arg(long, default_value_t = f64::INFINITY)]
        gamma_max: f64,
        #[arg(long, default_value_t = 0)]
        bootstrap_seed: u64,
        /// Output directory for fit_report.json and fit_plot.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Scaling fits over every [L_min, L_max] window of a table.
    Sweep {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        observable: Option<String>,
        #[arg(long)]
        fix_b: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Half-chain entropy of random half-filled states.
    PageRef {
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Verify a run directory and summarize its points.
    Report { dir: PathBuf },
}

fn print_json(value: &impl serde::Serialize) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Simulate { config, resume, workers, seed, max_points } => {
            let mut cfg = match (&config, &resume) {
                (Some(path), _) => RunConfig::load(path)?,
                (None, Some(dir)) => Manifest::read(dir)?.config,
                (None, None) => return Err(CliError::Config("pass --config or --resume".into())),
            };
            if let Some(s) = seed {
                cfg.ensemble.master_seed = s;
            }
            let summary = simulate(&cfg, &SimulateOptions { resume, workers, max_points })?;
            eprintln!(
                "{}: {} done, {} failed, {} pending (config {})",
                summary.directory.display(),
                summary.done,
                summary.failed,
                summary.pending,
                &summary.config_hash[..12]
            );
            Ok(summary.failed == 0)
        }
        Command::Fit { table, kind, observable, fix_b, gamma_max, bootstrap_seed, out } => {
            let table = ResultTable::read(&table)?;
            let spec = FitSpec { kind, observable, fix_b, gamma_max, bootstrap_seed };
            let report = analysis::fit_table(&table, &spec)?;
            analysis::write_fit(&report, &out)?;
            eprintln!("wrote {}", out.display());
            Ok(true)
        }
        Command::Sweep { table, observable, fix_b, out } => {
            let table = ResultTable::read(&table)?;
            let report = analysis::sweep_table(&table, observable.as_deref(), fix_b)?;
            analysis::write_sweep(&report, &out)?;
            eprintln!("wrote {}", out.display());
            Ok(true)
        }
        Command::PageRef { l, samples, seed } => {
            print_json(&analysis::page_ref(l, samples, seed)?)?;
            Ok(true)
        }
        Command::Report { dir } => {
            let r = analysis::report(&dir)?;
            print_json(&r)?;
            Ok(r.failed == 0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

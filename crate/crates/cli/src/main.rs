//! `rbsim`: simulate and analyze randomized benchmarking experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rbsim_cli::commands::{self, FitArgs, ShadowArgs};
use rbsim_cli::selftest;

#[derive(Parser)]
#[command(
    name = "rbsim",
    version,
    about = "Simulate and analyze randomized benchmarking experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured protocol and write its artifacts
    Simulate {
        /// Experiment configuration (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Output directory for artifacts
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Fit a decay CSV and report formula-tagged fidelity figures
    #[command(visible_alias = "report")]
    Fit {
        /// Decay CSV as written by simulate
        #[arg(long)]
        data: PathBuf,
        /// Decay model: single-exp, direct-fidelity, multi-exp or power
        #[arg(long, default_value = "single-exp")]
        model: String,
        /// Exponential term count for multi-exp
        #[arg(long)]
        terms: Option<usize>,
        /// Observable to fit; defaults to survival or the only one present
        #[arg(long)]
        observable: Option<String>,
        /// Qubit count of the gate set the data came from
        #[arg(long, default_value_t = 1)]
        qubits: usize,
        /// Also rescale the infidelity to the physical-rotation level
        #[arg(long = "rescale-sq")]
        rescale_sq: bool,
        /// Write the report TOML here as well as to stdout
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write an SVG decay plot
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Plot y - B on a log axis
        #[arg(long = "log-y")]
        log_y: bool,
    },
    /// Median-of-means correlation estimates from shadow records
    ShadowEstimate {
        /// Record file as written by simulate
        #[arg(long)]
        records: PathBuf,
        /// Probe name (identity or a subspace label) or a probe TOML file
        #[arg(long)]
        probe: String,
        /// Records per batch
        #[arg(long = "N")]
        batch_size: usize,
        /// Batch count for the median
        #[arg(long = "K")]
        batches: usize,
        /// Gate set group the records were drawn from
        #[arg(long, default_value = "c1")]
        group: String,
        /// Probe normalization for named probes
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Experiment config enabling the analytic comparison column
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the report TOML here as well as to stdout
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the embedded verification suite
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out } => commands::simulate(&config, &out),
        Command::Fit {
            data,
            model,
            terms,
            observable,
            qubits,
            rescale_sq,
            report,
            svg,
            log_y,
        } => commands::fit_report(&FitArgs {
            data,
            model,
            terms,
            observable,
            qubits,
            rescale_sq,
            report,
            svg,
            log_y,
        }),
        Command::ShadowEstimate {
            records,
            probe,
            batch_size,
            batches,
            group,
            alpha,
            config,
            report,
        } => commands::shadow_estimate_report(&ShadowArgs {
            records,
            probe,
            batch_size,
            batches,
            group,
            alpha,
            config,
            report,
        }),
        Command::Selftest => return run_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn run_selftest() -> ExitCode {
    let mut failed = false;
    for check in selftest::run_all() {
        match check.outcome {
            Ok(detail) => println!("SELFTEST {}: PASS - {detail}", check.name),
            Err(detail) => {
                failed = true;
                println!("SELFTEST {}: FAIL - {detail}", check.name);
            }
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

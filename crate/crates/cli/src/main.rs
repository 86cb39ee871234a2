//! `muhs`: batch runner for the solver, operator checks and convergence studies.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use muhs_core::pipeline::{self, Command, ManifestStatus, RunOptions};
use muhs_core::Error;

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_GUARD: u8 = 3;
const EXIT_VERIFICATION: u8 = 4;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "muhs", version, about = "Spectral solver for the weakly dissipative mu-Hunter-Saxton equation")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sub {
    /// Evolve the configured data and write snapshots plus diagnostics
    Simulate(Common),
    /// Compare the three inverse routes of A on random trigonometric polynomials
    KernelCheck {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Track characteristics alongside the solver
    Characteristics {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Run a mollified family and check the uniform bounds
    Converge {
        #[command(flatten)]
        common: Common,
        /// Comma separated mollifier indices, e.g. 8,16,32
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
        /// Parallel runs (default: available cores)
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Integrated energy balance of the mollified solution
    EnergyBalance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mollify_n: Option<usize>,
    },
    /// Diagnostics and decay laws only, no snapshots
    Invariants(Common),
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. }
        | Error::InvalidGridSize(_)
        | Error::MollifierIndex(_)
        | Error::UnresolvedMollifier { .. }
        | Error::ZeroPeakon
        | Error::MissingMollification
        | Error::StepBudget { .. }
        | Error::InvalidArgument(_) => EXIT_CONFIG,
        Error::BlowupGuard { .. } => EXIT_GUARD,
        _ => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };

    let mut opts = RunOptions::default();
    let (command, config) = match cli.command {
        Sub::Simulate(c) => {
            opts.out = c.out;
            (Command::Simulate, Some(c.config))
        }
        Sub::Invariants(c) => {
            opts.out = c.out;
            (Command::Invariants, Some(c.config))
        }
        Sub::KernelCheck { n, out } => {
            opts.n = Some(n);
            opts.out = out;
            (Command::KernelCheck, None)
        }
        Sub::Characteristics { common, seeds } => {
            opts.out = common.out;
            opts.seeds = seeds;
            (Command::Characteristics, Some(common.config))
        }
        Sub::Converge { common, ns, jobs } => {
            opts.out = common.out;
            opts.ns = Some(ns);
            opts.jobs = jobs;
            (Command::Converge, Some(common.config))
        }
        Sub::EnergyBalance { common, mollify_n } => {
            opts.out = common.out;
            opts.mollify_n = mollify_n;
            (Command::EnergyBalance, Some(common.config))
        }
    };

    if let Some(path) = &config {
        if !path.is_file() {
            eprintln!("error: config file {} not found", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    }

    match pipeline::run(command, config.as_deref(), &opts) {
        Ok(manifest) => {
            println!(
                "{}: {:?}, {} files in {}",
                command.name(),
                manifest.status,
                manifest.files.len(),
                manifest.output_dir.display()
            );
            match manifest.status {
                ManifestStatus::Completed => ExitCode::SUCCESS,
                ManifestStatus::BlowupGuardTriggered => ExitCode::from(EXIT_GUARD),
                ManifestStatus::VerificationFailed => ExitCode::from(EXIT_VERIFICATION),
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

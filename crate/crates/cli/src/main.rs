use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ebm_cli::commands::{self, SimulateOpts, SweepOpts};
use ebm_cli::config::ModelConfig;
use ebm_cli::{oracle, CliError};
use ebm_core::insolation::DEFAULT_OBLIQUITY_DEG;
use ebm_core::model::ModelParams;
use ebm_core::sweep::SweepParam;

#[derive(Parser)]
#[command(name = "ebm", version, about = "Energy-balance climate model with a moving ice line")]
struct Cli {
    /// Write the main output here instead of standard output.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Print progress notes on standard error.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Legendre coefficients of the annual-mean insolation as JSON.
    InsolationCoeffs {
        #[arg(long, default_value_t = DEFAULT_OBLIQUITY_DEG)]
        beta: f64,
        #[arg(long, default_value_t = 5)]
        max_mode: usize,
    },
    /// Monomial coefficients of the reduced ice-line flow as JSON.
    ReducedPoly {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rest states of the reduced flow as a JSON list.
    Equilibria {
        #[arg(long)]
        config: PathBuf,
        /// Also list ice lines pinned at the equator or the pole.
        #[arg(long)]
        boundary: bool,
    },
    /// Integrate the full system (or the reduced flow) and write CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        eta0: f64,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        reduced: bool,
        /// Minimum time between rows; 0 writes every step.
        #[arg(long, default_value_t = 0.0)]
        every: f64,
    },
    /// One-parameter equilibrium sweep: CSV of branch points plus a JSON summary.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of A, D, C, Q.
        #[arg(long)]
        param: String,
        #[arg(long)]
        min: f64,
        #[arg(long)]
        max: f64,
        #[arg(long)]
        steps: usize,
        /// Parameter accuracy of refined folds.
        #[arg(long, default_value_t = 1e-3)]
        fold_tol: f64,
        /// Where to write the JSON summary. Defaults to standard error.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run the oracle-equivalence suite.
    Validate {
        #[arg(long, default_value_t = oracle::DEFAULT_SEED)]
        seed: u64,
    },
}

fn load(path: &Path) -> Result<ModelParams, CliError> {
    ModelConfig::load(path)?.to_params()
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = cli.output.as_deref();
    match cli.command {
        Command::InsolationCoeffs { beta, max_mode } => emit(out, &commands::insolation_coeffs(beta, max_mode)?),
        Command::ReducedPoly { config } => emit(out, &commands::reduced_poly(&load(&config)?)?),
        Command::Equilibria { config, boundary } => emit(out, &commands::equilibria(&load(&config)?, boundary)?),
        Command::Simulate {
            config,
            eta0,
            t_end,
            reduced,
            every,
        } => {
            let params = load(&config)?;
            let opts = SimulateOpts {
                eta0,
                t_end,
                reduced,
                every,
            };
            emit(out, &commands::simulate(&params, &opts)?)
        }
        Command::Sweep {
            config,
            param,
            min,
            max,
            steps,
            fold_tol,
            summary,
        } => {
            let params = load(&config)?;
            let param = SweepParam::from_symbol(&param)
                .ok_or_else(|| CliError::Config(format!("unknown sweep parameter {param:?}; use A, D, C or Q")))?;
            let spec = commands::sweep_spec(
                &params,
                &SweepOpts {
                    param,
                    min,
                    max,
                    steps,
                    fold_tol,
                },
            )?;
            if cli.verbose {
                eprintln!("sweeping {} over {steps} points", param.symbol());
            }
            let result = commands::run_sweep_parallel(&spec)?;
            let csv = commands::sweep_csv(&result);
            let json = commands::sweep_summary(&result);
            emit(out, &csv)?;
            match summary {
                Some(p) => fs::write(p, json)?,
                None => eprint!("{json}"),
            }
            Ok(())
        }
        Command::Validate { seed } => {
            let checks = oracle::run_all(seed);
            emit(out, &oracle::report(&checks))?;
            let failed = checks.iter().filter(|c| !c.passed()).count();
            if failed > 0 {
                return Err(CliError::Numerical(format!("{failed} oracle check(s) failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ebm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

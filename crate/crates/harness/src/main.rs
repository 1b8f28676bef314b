use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use relaysec_harness::config::{load_config, parse_mode};
use relaysec_harness::{
    certify, emit_csv, emit_plotdata, run_experiment, write_csv, HarnessError, SweepAxis,
};

#[derive(Parser)]
#[command(
    name = "relaysec",
    version,
    about = "Secure relay OFDMA allocation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write the averaged rates as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Relay mode, overrides the config: af or df.
        #[arg(long)]
        mode: Option<String>,
        /// Swept budget, overrides the config: ps or pr.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// CSV destination; stdout when neither this nor the config sets one.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write gnuplot data here.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the fast solvers against the exhaustive oracles.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Run {
            config,
            mode,
            sweep,
            seed,
            trials,
            out,
            plot,
        } => {
            let mut spec = load_config(&config)?;
            if let Some(m) = mode {
                spec.mode = parse_mode(&m)?;
            }
            if let Some(s) = sweep {
                spec.sweep.axis = s.parse::<SweepAxis>()?;
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(t) = trials {
                spec.trials = t;
            }
            if out.is_some() {
                spec.output = out;
            }
            let table = run_experiment(&spec)?;
            let failures: usize = table.rows.iter().map(|r| r.failures).sum();
            if failures > 0 {
                eprintln!("warning: {failures} solves failed and were excluded");
            }
            match &spec.output {
                Some(path) => emit_csv(&table, path)?,
                None => write_csv(&table, std::io::stdout().lock()).map_err(|source| {
                    HarnessError::Csv {
                        path: Path::new("<stdout>").to_path_buf(),
                        source,
                    }
                })?,
            }
            if let Some(p) = plot {
                emit_plotdata(&table, &p)?;
            }
            Ok(())
        }
        Command::Validate { config } => {
            let spec = load_config(&config)?;
            println!(
                "ok: {} mode, N={}, M={}, {} trials, {} sweep points, {} schemes",
                spec.mode,
                spec.system.num_subcarriers,
                spec.system.num_users,
                spec.trials,
                spec.sweep.values_db.len(),
                spec.schemes.len()
            );
            Ok(())
        }
        Command::Oracle { config } => {
            let spec = load_config(&config)?;
            let c = certify(&spec)?;
            println!(
                "pairing: {} checks, {} dominance violations",
                c.pairing_checks, c.dominance_violations
            );
            println!(
                "power: {} checks, {} violations, worst relative gap {:.3e}",
                c.power_checks, c.power_violations, c.worst_power_gap
            );
            if c.passed() {
                Ok(())
            } else {
                Err(HarnessError::FailureBudget {
                    failed: c.dominance_violations + c.power_violations,
                    total: c.pairing_checks + c.power_checks,
                    allowed: 0.0,
                })
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

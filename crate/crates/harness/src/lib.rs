//! Experiment runner for the `relaysec` allocation engine: TOML experiment
//! files, Monte Carlo sweeps, CSV and gnuplot output, oracle checks.

pub mod certify;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use certify::{certify, Certification};
pub use config::{load_config, parse_config};
pub use error::{HarnessError, Result};
pub use experiment::{
    evaluate, mean_stderr, run_experiment, run_trials, ExperimentSpec, PairingScheme, PowerScheme,
    ResultTable, Row, Scheme, Sweep, SweepAxis, TrialOutcome, Trials,
};
pub use output::{emit_csv, emit_plotdata, read_csv, write_csv};

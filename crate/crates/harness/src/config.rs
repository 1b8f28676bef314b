//! TOML experiment files.
//!
//! ```toml
//! mode = "af"            # af | df
//! trials = 1000
//! seed = 1
//! schemes = ["opa-opt", "opa-op", "opa-def", "epa-opt", "epa-def"]
//! output = "results.csv"
//!
//! [system]
//! subcarriers = 64
//! users = 8
//! noise_db = 0.0
//!
//! [sweep]
//! axis = "ps"            # ps | pr
//! values_db = [0, 6, 12, 18, 24, 30]
//! fixed_db = 18
//! ```
//!
//! Budgets are SNRs in dB relative to the noise power. Anything left out of
//! `[system]` takes the library defaults.

use std::path::{Path, PathBuf};

use relaysec::power::db_to_linear;
use relaysec::{Fading, Point, RelayMode, SystemConfig};
use serde::Deserialize;

use crate::error::{HarnessError, Result};
use crate::experiment::{ExperimentSpec, Scheme, Sweep};

pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_SCHEMES: [&str; 3] = ["opa-opt", "opa-def", "epa-def"];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mode: Option<String>,
    trials: Option<usize>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    schemes: Option<Vec<String>>,
    max_failure_fraction: Option<f64>,
    #[serde(default)]
    system: SystemSection,
    sweep: SweepSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    subcarriers: Option<usize>,
    users: Option<usize>,
    noise_db: Option<f64>,
    path_loss_exponent: Option<f64>,
    source: Option<[f64; 2]>,
    relay: Option<[f64; 2]>,
    user_region_center: Option<[f64; 2]>,
    user_region_side: Option<f64>,
    fading: Option<String>,
    placement_seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    axis: String,
    values_db: Vec<f64>,
    fixed_db: f64,
}

pub fn parse_mode(s: &str) -> Result<RelayMode> {
    match s.trim().to_ascii_lowercase().as_str() {
        "af" => Ok(RelayMode::Af),
        "df" => Ok(RelayMode::Df),
        other => Err(HarnessError::Config(format!(
            "unknown relay mode `{other}`"
        ))),
    }
}

fn parse_fading(s: &str) -> Result<Fading> {
    match s.trim().to_ascii_lowercase().as_str() {
        "rayleigh" => Ok(Fading::Rayleigh),
        "none" => Ok(Fading::None),
        other => Err(HarnessError::Config(format!(
            "unknown fading model `{other}`"
        ))),
    }
}

fn point(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

impl SystemSection {
    fn build(self) -> Result<SystemConfig> {
        let mut c = SystemConfig::default();
        if let Some(n) = self.subcarriers {
            c.num_subcarriers = n;
        }
        if let Some(m) = self.users {
            c.num_users = m;
        }
        if let Some(db) = self.noise_db {
            c.noise_variance = db_to_linear(db);
        }
        if let Some(a) = self.path_loss_exponent {
            c.path_loss_exponent = a;
        }
        if let Some(p) = self.source {
            c.source_pos = point(p);
        }
        if let Some(p) = self.relay {
            c.relay_pos = point(p);
        }
        if let Some(p) = self.user_region_center {
            c.user_region_center = point(p);
        }
        if let Some(s) = self.user_region_side {
            c.user_region_side = s;
        }
        if let Some(f) = self.fading {
            c.fading = parse_fading(&f)?;
        }
        c.placement_seed = self.placement_seed;
        Ok(c)
    }
}

/// Parses and validates an experiment description.
pub fn parse_config(text: &str, origin: &Path) -> Result<ExperimentSpec> {
    let file: FileConfig = toml::from_str(text).map_err(|source| HarnessError::Toml {
        path: origin.to_path_buf(),
        source,
    })?;
    let schemes = match file.schemes {
        Some(v) => v
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Scheme>>>()?,
        None => DEFAULT_SCHEMES
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_>>()?,
    };
    let spec = ExperimentSpec {
        system: file.system.build()?,
        mode: parse_mode(file.mode.as_deref().unwrap_or("af"))?,
        schemes,
        sweep: Sweep {
            axis: file.sweep.axis.parse()?,
            values_db: file.sweep.values_db,
            fixed_db: file.sweep.fixed_db,
        },
        trials: file.trials.unwrap_or(DEFAULT_TRIALS),
        seed: file.seed.unwrap_or(1),
        output: file.output,
        max_failure_fraction: file.max_failure_fraction.unwrap_or(0.0),
    };
    spec.validate()?;
    Ok(spec)
}

pub fn load_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}

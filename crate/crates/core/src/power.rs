//! Power allocation types and the AF/DF solvers.
//!
//! Multipliers are reported in nats per unit power, matching the derivative
//! of the halved secure rate in natural-log units.

pub mod af;
pub mod df;

use crate::error::{Error, Result};
use crate::rates::RelayMode;

/// Source and relay power budgets (linear scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budgets {
    pub source: f64,
    pub relay: f64,
}

impl Budgets {
    pub fn new(source: f64, relay: f64) -> Result<Self> {
        if !(source.is_finite() && relay.is_finite()) {
            return Err(Error::NonFinite("power budget"));
        }
        if source <= 0.0 || relay <= 0.0 {
            return Err(Error::InvalidBudget(format!(
                "budgets must be positive, got source {source}, relay {relay}"
            )));
        }
        Ok(Budgets { source, relay })
    }

    /// Budgets given as SNRs in dB relative to `noise`.
    pub fn from_db(source_db: f64, relay_db: f64, noise: f64) -> Result<Self> {
        Budgets::new(
            noise * db_to_linear(source_db),
            noise * db_to_linear(relay_db),
        )
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Powers per subcarrier pair, indexed by source-relay subcarrier `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub ps: Vec<f64>,
    pub pr: Vec<f64>,
    /// Source-budget multiplier.
    pub lambda: f64,
    /// Relay-budget multiplier.
    pub mu: f64,
    pub mode: RelayMode,
}

impl PowerAllocation {
    pub fn zeros(n: usize, mode: RelayMode) -> Self {
        PowerAllocation {
            ps: vec![0.0; n],
            pr: vec![0.0; n],
            lambda: 0.0,
            mu: 0.0,
            mode,
        }
    }

    /// Equal split of both budgets over `n` subcarriers.
    pub fn uniform(n: usize, budgets: Budgets, mode: RelayMode) -> Self {
        let k = n.max(1) as f64;
        PowerAllocation {
            ps: vec![budgets.source / k; n],
            pr: vec![budgets.relay / k; n],
            lambda: 0.0,
            mu: 0.0,
            mode,
        }
    }

    pub fn len(&self) -> usize {
        self.ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ps.is_empty()
    }

    pub fn total_source(&self) -> f64 {
        self.ps.iter().sum()
    }

    pub fn total_relay(&self) -> f64 {
        self.pr.iter().sum()
    }
}

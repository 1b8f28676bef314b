//! Monte Carlo sweeps over power budgets.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use itertools::Itertools;
use rayon::prelude::*;
use relaysec::pairing::{opt_scp, pair_af, pair_df, pair_ordered, solve_paired};
use relaysec::power::db_to_linear;
use relaysec::{
    allocate, brute_force_scp, generate_realization, sum_secure_rate, Assignment, Budgets,
    ChannelRealization, DfCase, Pairing, PowerAllocation, RelayMode, SystemConfig,
};

use crate::error::{HarnessError, Result};

/// Per-trial seed stride (odd, so distinct trials never collide).
const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PowerScheme {
    Opa,
    Epa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairingScheme {
    Def,
    Opt,
    Op,
    Brute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scheme {
    pub power: PowerScheme,
    pub pairing: PairingScheme,
}

impl Scheme {
    pub const fn new(power: PowerScheme, pairing: PairingScheme) -> Self {
        Scheme { power, pairing }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.power {
            PowerScheme::Opa => "opa",
            PowerScheme::Epa => "epa",
        };
        let s = match self.pairing {
            PairingScheme::Def => "def",
            PairingScheme::Opt => "opt",
            PairingScheme::Op => "op",
            PairingScheme::Brute => "brute",
        };
        write!(f, "{p}-{s}")
    }
}

impl FromStr for Scheme {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (p, q) = lower.split_once(['-', '+', '/']).ok_or_else(|| {
            HarnessError::Config(format!("scheme `{s}` is not <power>-<pairing>"))
        })?;
        let power = match p {
            "opa" => PowerScheme::Opa,
            "epa" => PowerScheme::Epa,
            _ => return Err(HarnessError::Config(format!("unknown power scheme `{p}`"))),
        };
        let pairing = match q {
            "def" => PairingScheme::Def,
            "opt" => PairingScheme::Opt,
            "op" => PairingScheme::Op,
            "brute" => PairingScheme::Brute,
            _ => {
                return Err(HarnessError::Config(format!(
                    "unknown pairing scheme `{q}`"
                )))
            }
        };
        Ok(Scheme { power, pairing })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    Source,
    Relay,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Source => "ps",
            SweepAxis::Relay => "pr",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ps" | "source" => Ok(SweepAxis::Source),
            "pr" | "relay" => Ok(SweepAxis::Relay),
            other => Err(HarnessError::Config(format!(
                "unknown sweep axis `{other}`"
            ))),
        }
    }
}

/// Budget sweep: `axis` takes each of `values_db`, the other budget stays at
/// `fixed_db`. Both are SNRs in dB relative to the noise power.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values_db: Vec<f64>,
    pub fixed_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub system: SystemConfig,
    pub mode: RelayMode,
    pub schemes: Vec<Scheme>,
    pub sweep: Sweep,
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Largest tolerated fraction of failed solves before the run errors out.
    pub max_failure_fraction: f64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(HarnessError::Config("no schemes selected".into()));
        }
        if self.sweep.values_db.is_empty() {
            return Err(HarnessError::Config("sweep has no values".into()));
        }
        if self.sweep.values_db.iter().any(|v| !v.is_finite()) || !self.sweep.fixed_db.is_finite() {
            return Err(HarnessError::Config("sweep values must be finite".into()));
        }
        let n = self.system.num_subcarriers;
        if n > relaysec::oracle::MAX_SCP_SUBCARRIERS
            && self
                .schemes
                .iter()
                .any(|s| s.pairing == PairingScheme::Brute)
        {
            return Err(HarnessError::Config(format!(
                "brute-force pairing needs at most {} subcarriers, got {n}",
                relaysec::oracle::MAX_SCP_SUBCARRIERS
            )));
        }
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            return Err(HarnessError::Config(
                "max_failure_fraction must lie in [0, 1]".into(),
            ));
        }
        for &v in &self.sweep.values_db {
            self.budgets_at(v)?;
        }
        Ok(())
    }

    /// Budgets at sweep value `value_db`.
    pub fn budgets_at(&self, value_db: f64) -> Result<Budgets> {
        let noise = self.system.noise_variance;
        let (s, r) = match self.sweep.axis {
            SweepAxis::Source => (value_db, self.sweep.fixed_db),
            SweepAxis::Relay => (self.sweep.fixed_db, value_db),
        };
        Ok(Budgets::new(
            noise * db_to_linear(s),
            noise * db_to_linear(r),
        )?)
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed
            .wrapping_add((trial as u64).wrapping_mul(SEED_STRIDE))
    }

    pub fn realization(&self, trial: usize) -> Result<ChannelRealization> {
        Ok(generate_realization(
            &self.system.with_seed(self.trial_seed(trial)),
        )?)
    }
}

/// Result of one scheme on one realization at one budget point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    /// Sum secure rate divided by the number of subcarriers.
    pub rate: f64,
    /// The relay budget was not binding (optimal power schemes only).
    pub relay_slack: bool,
    pub case: Option<DfCase>,
}

fn epa_rate(
    real: &ChannelRealization,
    asg: &Assignment,
    pairing: &Pairing,
    budgets: Budgets,
    mode: RelayMode,
) -> relaysec::Result<f64> {
    let powers = PowerAllocation::uniform(real.num_subcarriers(), budgets, mode);
    Ok(sum_secure_rate(real, asg, pairing, &powers, mode)?.sum)
}

/// Rate of `scheme` on one realization.
pub fn evaluate(
    real: &ChannelRealization,
    asg: &Assignment,
    budgets: Budgets,
    mode: RelayMode,
    scheme: Scheme,
) -> relaysec::Result<TrialOutcome> {
    let n = real.num_subcarriers();
    let per = 1.0 / n as f64;
    match scheme.power {
        PowerScheme::Opa => {
            let sol = match scheme.pairing {
                PairingScheme::Def => solve_paired(real, asg, Pairing::identity(n), budgets, mode)?,
                PairingScheme::Op => {
                    solve_paired(real, asg, pair_ordered(real, asg)?, budgets, mode)?
                }
                PairingScheme::Opt => opt_scp(real, asg, budgets, mode)?,
                PairingScheme::Brute => {
                    let o = brute_force_scp(real, asg, budgets, mode)?;
                    return Ok(TrialOutcome {
                        rate: o.best_rate * per,
                        relay_slack: o.best_powers.mu == 0.0,
                        case: None,
                    });
                }
            };
            Ok(TrialOutcome {
                rate: sol.rate * per,
                relay_slack: sol.powers.mu == 0.0,
                case: sol.case,
            })
        }
        PowerScheme::Epa => {
            let rate = match scheme.pairing {
                PairingScheme::Def => epa_rate(real, asg, &Pairing::identity(n), budgets, mode)?,
                PairingScheme::Op => epa_rate(real, asg, &pair_ordered(real, asg)?, budgets, mode)?,
                PairingScheme::Opt => {
                    let p = match mode {
                        RelayMode::Af => pair_af(real, asg)?,
                        RelayMode::Df => pair_df(real, asg, budgets)?.0,
                    };
                    epa_rate(real, asg, &p, budgets, mode)?
                }
                PairingScheme::Brute => {
                    let mut best = f64::NEG_INFINITY;
                    for perm in (0..n).permutations(n) {
                        best = best.max(epa_rate(real, asg, &Pairing::new(perm)?, budgets, mode)?);
                    }
                    best
                }
            };
            Ok(TrialOutcome {
                rate: rate * per,
                relay_slack: false,
                case: None,
            })
        }
    }
}

/// Raw outcomes, indexed `[trial][sweep point][scheme]`; `None` marks a
/// failed solve.
#[derive(Debug, Clone)]
pub struct Trials {
    pub spec: ExperimentSpec,
    pub outcomes: Vec<Vec<Vec<Option<TrialOutcome>>>>,
}

impl Trials {
    pub fn failures(&self) -> usize {
        self.outcomes
            .iter()
            .flatten()
            .flatten()
            .filter(|o| o.is_none())
            .count()
    }

    /// Successful outcomes of `scheme` index `s` at sweep point `p`.
    pub fn column(&self, p: usize, s: usize) -> Vec<TrialOutcome> {
        self.outcomes.iter().filter_map(|t| t[p][s]).collect()
    }

    pub fn table(&self) -> ResultTable {
        let mut rows = Vec::new();
        for (s, scheme) in self.spec.schemes.iter().enumerate() {
            for (p, &v) in self.spec.sweep.values_db.iter().enumerate() {
                let rates: Vec<f64> = self.column(p, s).iter().map(|o| o.rate).collect();
                let (mean, stderr) = mean_stderr(&rates);
                rows.push(Row {
                    scheme: scheme.to_string(),
                    mode: self.spec.mode.to_string(),
                    sweep_axis: self.spec.sweep.axis.as_str().to_string(),
                    sweep_db: v,
                    mean_rate: mean,
                    stderr,
                    trials: rates.len(),
                    failures: self.outcomes.len() - rates.len(),
                });
            }
        }
        ResultTable { rows }
    }
}

/// Compensated (Kahan) sum.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = kahan_sum(values.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs every trial of `spec`. Trials run in parallel; results are stored by
/// trial index so the output does not depend on scheduling.
pub fn run_trials(spec: &ExperimentSpec) -> Result<Trials> {
    spec.validate()?;
    let budgets: Vec<Budgets> = spec
        .sweep
        .values_db
        .iter()
        .map(|&v| spec.budgets_at(v))
        .collect::<Result<_>>()?;
    let outcomes = (0..spec.trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<Vec<Option<TrialOutcome>>>> {
            let real = spec.realization(t)?;
            let asg = allocate(&real);
            Ok(budgets
                .iter()
                .map(|&b| {
                    spec.schemes
                        .iter()
                        .map(|&s| evaluate(&real, &asg, b, spec.mode, s).ok())
                        .collect()
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let trials = Trials {
        spec: spec.clone(),
        outcomes,
    };
    let failed = trials.failures();
    let total = spec.trials * spec.schemes.len() * spec.sweep.values_db.len();
    if failed as f64 > spec.max_failure_fraction * total as f64 {
        return Err(HarnessError::FailureBudget {
            failed,
            total,
            allowed: spec.max_failure_fraction,
        });
    }
    Ok(trials)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    Ok(run_trials(spec)?.table())
}

/// One row of averaged results. Rates are in bits per OFDM symbol per
/// subcarrier.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Row {
    pub scheme: String,
    pub mode: String,
    pub sweep_axis: String,
    pub sweep_db: f64,
    pub mean_rate: f64,
    pub stderr: f64,
    pub trials: usize,
    #[serde(skip)]
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<Row>,
}

impl ResultTable {
    pub fn rows_for<'a>(&'a self, scheme: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }

    pub fn get(&self, scheme: &str, sweep_db: f64) -> Option<&Row> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.sweep_db == sweep_db)
    }
}

//! Cross-checks of the fast solvers against the exhaustive oracles.

use rayon::prelude::*;
use relaysec::oracle::{MAX_POWER_SUBCARRIERS, MAX_SCP_SUBCARRIERS};
use relaysec::pairing::{opt_scp, pair_ordered, solve_paired};
use relaysec::{allocate, brute_force_scp, solve_power_bruteforce, sum_secure_rate, Pairing};

use crate::error::{HarnessError, Result};
use crate::experiment::ExperimentSpec;

/// Relative shortfall allowed between the power solver and the grid oracle.
pub const POWER_TOLERANCE: f64 = 1e-4;
pub const ORACLE_GRID: usize = 6;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Certification {
    pub pairing_checks: usize,
    /// A heuristic pairing beat the exhaustive search.
    pub dominance_violations: usize,
    pub power_checks: usize,
    pub power_violations: usize,
    /// Largest relative amount by which the solver fell short of the oracle.
    pub worst_power_gap: f64,
}

impl Certification {
    pub fn passed(&self) -> bool {
        self.dominance_violations == 0 && self.power_violations == 0
    }

    fn merge(mut self, o: Certification) -> Certification {
        self.pairing_checks += o.pairing_checks;
        self.dominance_violations += o.dominance_violations;
        self.power_checks += o.power_checks;
        self.power_violations += o.power_violations;
        self.worst_power_gap = self.worst_power_gap.max(o.worst_power_gap);
        self
    }
}

/// Runs the oracle checks on every trial and sweep point of `spec`. The
/// power check needs at most 4 subcarriers and is skipped above that.
pub fn certify(spec: &ExperimentSpec) -> Result<Certification> {
    spec.validate()?;
    let n = spec.system.num_subcarriers;
    if n > MAX_SCP_SUBCARRIERS {
        return Err(HarnessError::Config(format!(
            "oracle checks need at most {MAX_SCP_SUBCARRIERS} subcarriers, got {n}"
        )));
    }
    let mode = spec.mode;
    let per_trial = (0..spec.trials)
        .into_par_iter()
        .map(|t| -> Result<Certification> {
            let real = spec.realization(t)?;
            let asg = allocate(&real);
            let mut c = Certification::default();
            for &v in &spec.sweep.values_db {
                let b = spec.budgets_at(v)?;
                let brute = brute_force_scp(&real, &asg, b, mode)?.best_rate;
                let slack = 1e-9 * brute.abs() + 1e-12;
                let candidates = [
                    opt_scp(&real, &asg, b, mode)?.rate,
                    solve_paired(&real, &asg, pair_ordered(&real, &asg)?, b, mode)?.rate,
                    solve_paired(&real, &asg, Pairing::identity(n), b, mode)?.rate,
                ];
                c.pairing_checks += candidates.len();
                c.dominance_violations += candidates.iter().filter(|&&r| r > brute + slack).count();

                if n <= MAX_POWER_SUBCARRIERS {
                    let id = Pairing::identity(n);
                    let fast = solve_paired(&real, &asg, id.clone(), b, mode)?.rate;
                    let o = solve_power_bruteforce(&real, &asg, &id, b, mode, ORACLE_GRID)?;
                    let slow = sum_secure_rate(&real, &asg, &id, &o, mode)?.sum;
                    let gap = (slow - fast) / slow.abs().max(1e-12);
                    c.power_checks += 1;
                    c.worst_power_gap = c.worst_power_gap.max(gap);
                    if gap > POWER_TOLERANCE {
                        c.power_violations += 1;
                    }
                }
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_trial
        .into_iter()
        .fold(Certification::default(), Certification::merge))
}

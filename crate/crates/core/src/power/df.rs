//! DF power allocation by hop-SNR equalization and secure water-filling.
//!
//! At the optimum both hops carry the same SNR, `ps * g_sr = pr * g_rm`, which
//! turns the max-min objective into a concave problem in one power per pair.
//! Which budget binds decides how the water-fill is run.

use std::fmt;

use crate::allocation::Assignment;
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::pairing::Pairing;
use crate::power::{Budgets, PowerAllocation};
use crate::rates::{PairGains, RelayMode};
use crate::roots::{bracketed, positive_quadratic_root};

const MAX_ITER: usize = 200;

/// Which budget constraints are active at the DF optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DfCase {
    /// Relay budget binds, source budget slack.
    RelayLimited,
    /// Source budget binds, relay budget slack.
    SourceLimited,
    /// Both budgets bind.
    BothTight,
}

impl fmt::Display for DfCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DfCase::RelayLimited => "relay-limited",
            DfCase::SourceLimited => "source-limited",
            DfCase::BothTight => "both-tight",
        })
    }
}

/// Output of [`secure_waterfill`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFill {
    pub powers: Vec<f64>,
    /// Common marginal rate (nats per unit power) at the solution.
    pub level: f64,
    /// Set when no entry has `g_m > g_e`; all powers are then zero.
    pub degenerate: bool,
}

/// Power at marginal level `nu` for one entry: the positive root of
/// `noise (g_m - g_e) = 2 nu (noise + p g_m)(noise + p g_e)`.
pub(crate) fn level_power(g_m: f64, g_e: f64, nu: f64, noise: f64) -> f64 {
    if g_m <= g_e {
        return 0.0;
    }
    let a = g_m * g_e;
    let b = noise * (g_m + g_e);
    let c = noise * (g_m - g_e) / (2.0 * nu) - noise * noise;
    positive_quadratic_root(a, b, c)
}

/// Marginal rate at zero power.
fn zero_level(g_m: f64, g_e: f64, noise: f64) -> f64 {
    (g_m - g_e) / (2.0 * noise)
}

/// Maximizes `sum 0.5 ln((noise + p g_m)/(noise + p g_e))` subject to
/// `sum p = budget`.
pub fn secure_waterfill(g_m: &[f64], g_e: &[f64], budget: f64, noise: f64) -> Result<WaterFill> {
    if g_m.len() != g_e.len() {
        return Err(Error::Dimension(format!(
            "{} user gains vs {} eavesdropper gains",
            g_m.len(),
            g_e.len()
        )));
    }
    if !(budget.is_finite() && noise.is_finite()) {
        return Err(Error::NonFinite("water-fill budget"));
    }
    if budget <= 0.0 || noise <= 0.0 {
        return Err(Error::InvalidBudget(
            "budget and noise must be positive".into(),
        ));
    }
    if g_m.iter().chain(g_e).any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("channel gain"));
    }
    let n = g_m.len();
    let live: Vec<usize> = (0..n).filter(|&i| g_m[i] > g_e[i]).collect();
    if live.is_empty() {
        return Ok(WaterFill {
            powers: vec![0.0; n],
            level: 0.0,
            degenerate: true,
        });
    }
    let mut powers = vec![0.0; n];
    if live.len() == 1 {
        let i = live[0];
        powers[i] = budget;
        let level = 0.5 * noise * (g_m[i] - g_e[i])
            / ((noise + budget * g_m[i]) * (noise + budget * g_e[i]));
        return Ok(WaterFill {
            powers,
            level,
            degenerate: false,
        });
    }
    let total = |nu: f64| -> f64 {
        live.iter()
            .map(|&i| level_power(g_m[i], g_e[i], nu, noise))
            .sum()
    };
    let top = live
        .iter()
        .map(|&i| zero_level(g_m[i], g_e[i], noise))
        .fold(0.0, f64::max);
    let hi = top.ln();
    let mut lo = hi - 20.0;
    let mut f_lo = total(lo.exp()) - budget;
    while f_lo <= 0.0 {
        lo -= 20.0;
        f_lo = total(lo.exp()) - budget;
        if lo < -700.0 {
            return Err(Error::NoConvergence {
                what: "secure water-fill bracket",
                iterations: 0,
                residual: f_lo,
            });
        }
    }
    let root = bracketed(
        |u| total(u.exp()) - budget,
        lo,
        hi,
        f_lo,
        -budget,
        1e-14 * budget,
        1e-16,
        MAX_ITER,
    );
    let level = root.x.exp();
    for &i in &live {
        powers[i] = level_power(g_m[i], g_e[i], level, noise);
    }
    let sum: f64 = powers.iter().sum();
    if !(sum > 0.0) || ((sum - budget) / budget).abs() > 1e-8 {
        return Err(Error::NoConvergence {
            what: "secure water-fill",
            iterations: root.iterations,
            residual: sum - budget,
        });
    }
    // absorb the last few ulps of budget residual
    let scale = budget / sum;
    for p in &mut powers {
        *p *= scale;
    }
    Ok(WaterFill {
        powers,
        level,
        degenerate: false,
    })
}

fn both_tight_powers(gains: &[PairGains], noise: f64, lambda: f64, mu: f64) -> Vec<f64> {
    gains
        .iter()
        .map(|g| {
            let nu = mu + lambda * g.rm / g.sr;
            if nu <= 0.0 {
                return f64::INFINITY;
            }
            level_power(g.rm, g.re, nu, noise)
        })
        .collect()
}

/// Relay powers for both budgets tight: outer search on `lambda` for the
/// source budget, inner on `mu` for the relay budget.
fn solve_both_tight(
    gains: &[PairGains],
    noise: f64,
    budgets: Budgets,
    lambda_max: f64,
) -> Result<(Vec<f64>, f64, f64)> {
    let p_r = budgets.relay;
    let p_s = budgets.source;
    let mu_top = gains
        .iter()
        .filter(|g| g.is_secure())
        .map(|g| zero_level(g.rm, g.re, noise))
        .fold(0.0, f64::max);
    let inner = |lambda: f64| -> (f64, Vec<f64>) {
        let sum_pr = |mu: f64| {
            both_tight_powers(gains, noise, lambda, mu)
                .iter()
                .sum::<f64>()
        };
        let f0 = if lambda > 0.0 {
            sum_pr(0.0) - p_r
        } else {
            f64::INFINITY
        };
        if f0 <= 0.0 {
            return (0.0, both_tight_powers(gains, noise, lambda, 0.0));
        }
        let f_hi = sum_pr(mu_top) - p_r;
        let root = bracketed(
            |mu| sum_pr(mu) - p_r,
            0.0,
            mu_top,
            f0,
            f_hi,
            1e-13 * p_r,
            1e-16,
            MAX_ITER,
        );
        let mu = if root.fx.abs() <= 1e-13 * p_r {
            root.x
        } else {
            root.hi
        };
        (mu, both_tight_powers(gains, noise, lambda, mu))
    };
    let sum_ps = |pr: &[f64]| -> f64 { gains.iter().zip(pr).map(|(g, p)| p * g.rm / g.sr).sum() };
    let f = |lambda: f64| sum_ps(&inner(lambda).1) - p_s;
    let f_lo = f(0.0);
    let f_hi = f(lambda_max);
    let lambda = if f_lo <= 0.0 {
        0.0
    } else if f_hi >= 0.0 {
        lambda_max
    } else {
        let root = bracketed(f, 0.0, lambda_max, f_lo, f_hi, 1e-12 * p_s, 1e-16, MAX_ITER);
        if root.fx.abs() <= 1e-12 * p_s {
            root.x
        } else {
            root.hi
        }
    };
    let (mu, pr) = inner(lambda);
    Ok((pr, lambda, mu))
}

/// DF allocation for explicit per-pair gains.
pub fn solve_df_pairs(
    gains: &[PairGains],
    noise: f64,
    budgets: Budgets,
) -> Result<(PowerAllocation, DfCase)> {
    let n = gains.len();
    for g in gains {
        if !(g.sr.is_finite() && g.rm.is_finite() && g.re.is_finite()) {
            return Err(Error::NonFinite("channel gain"));
        }
        if g.sr <= 0.0 || g.rm <= 0.0 || g.re < 0.0 {
            return Err(Error::InvalidConfig(
                "channel gains must be positive".into(),
            ));
        }
    }
    let mut out = PowerAllocation::zeros(n, RelayMode::Df);
    if n == 0 || !gains.iter().any(|g| g.is_secure()) {
        return Ok((out, DfCase::RelayLimited));
    }
    let slack = 1.0 + 1e-12;

    // relay budget binds
    let g_m: Vec<f64> = gains.iter().map(|g| g.rm).collect();
    let g_e: Vec<f64> = gains.iter().map(|g| g.re).collect();
    let wf = secure_waterfill(&g_m, &g_e, budgets.relay, noise)?;
    let ps: Vec<f64> = gains
        .iter()
        .zip(&wf.powers)
        .map(|(g, p)| p * g.rm / g.sr)
        .collect();
    if ps.iter().sum::<f64>() <= budgets.source * slack {
        out.ps = ps;
        out.pr = wf.powers;
        out.mu = wf.level;
        return Ok((out, DfCase::RelayLimited));
    }

    // source budget binds
    let s_m: Vec<f64> = gains.iter().map(|g| g.sr).collect();
    let s_e: Vec<f64> = gains.iter().map(|g| g.sr * g.re / g.rm).collect();
    let wf = secure_waterfill(&s_m, &s_e, budgets.source, noise)?;
    let pr: Vec<f64> = gains
        .iter()
        .zip(&wf.powers)
        .map(|(g, p)| p * g.sr / g.rm)
        .collect();
    if pr.iter().sum::<f64>() <= budgets.relay * slack {
        out.ps = wf.powers;
        out.pr = pr;
        out.lambda = wf.level;
        return Ok((out, DfCase::SourceLimited));
    }

    let (pr, lambda, mu) = solve_both_tight(gains, noise, budgets, wf.level)?;
    out.ps = gains
        .iter()
        .zip(&pr)
        .map(|(g, p)| p * g.rm / g.sr)
        .collect();
    out.pr = pr;
    out.lambda = lambda;
    out.mu = mu;
    let over = (out.total_source() / budgets.source - 1.0).max(0.0)
        + (out.total_relay() / budgets.relay - 1.0).max(0.0);
    if !over.is_finite() || over > 1e-8 {
        return Err(Error::NoConvergence {
            what: "DF both-tight search",
            iterations: MAX_ITER,
            residual: over,
        });
    }
    Ok((out, DfCase::BothTight))
}

/// DF power allocation for a paired, allocated realization.
pub fn solve_df(
    realization: &ChannelRealization,
    assignment: &Assignment,
    pairing: &Pairing,
    budgets: Budgets,
) -> Result<(PowerAllocation, DfCase)> {
    let gains = pairing.gains_checked(realization, assignment)?;
    solve_df_pairs(&gains, realization.noise_variance(), budgets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::df_rate_nats;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_entry_takes_budget() {
        let wf = secure_waterfill(&[2.0], &[0.5], 3.7, 1.0).unwrap();
        assert_eq!(wf.powers, vec![3.7]);
        assert!(!wf.degenerate);
    }

    #[test]
    fn identical_entries_split() {
        let wf = secure_waterfill(&[2.0, 2.0], &[0.5, 0.5], 3.0, 1.0).unwrap();
        assert!((wf.powers[0] - 1.5).abs() < 1e-12);
        assert!((wf.powers[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_entries_flagged() {
        let wf = secure_waterfill(&[1.0, 0.5], &[1.0, 0.7], 2.0, 1.0).unwrap();
        assert!(wf.degenerate);
        assert_eq!(wf.powers, vec![0.0, 0.0]);
        let wf = secure_waterfill(&[1.0, 2.0], &[1.0, 0.7], 2.0, 1.0).unwrap();
        assert_eq!(wf.powers, vec![0.0, 2.0]);
    }

    #[test]
    fn zero_eavesdropper_is_plain_waterfill() {
        let wf = secure_waterfill(&[1.0, 4.0], &[0.0, 0.0], 3.0, 1.0).unwrap();
        // classic water level: 1 + p1 = 0.25 + p2
        assert!((wf.powers[0] - 1.125).abs() < 1e-10);
        assert!((wf.powers[1] - 1.875).abs() < 1e-10);
    }

    #[test]
    fn waterfill_matches_simplex_grid() {
        let g_m = [2.0, 1.2, 3.5];
        let g_e = [0.4, 0.9, 2.0];
        let budget = 2.5;
        let obj = |p: &[f64]| -> f64 {
            (0..3)
                .map(|i| 0.5 * ((1.0 + p[i] * g_m[i]) / (1.0 + p[i] * g_e[i])).ln())
                .sum()
        };
        let wf = secure_waterfill(&g_m, &g_e, budget, 1.0).unwrap();
        let mut best = 0.0f64;
        let steps = 600;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let p = [
                    budget * i as f64 / steps as f64,
                    budget * j as f64 / steps as f64,
                    budget * (steps - i - j) as f64 / steps as f64,
                ];
                best = best.max(obj(&p));
            }
        }
        let got = obj(&wf.powers);
        assert!(got >= best - 1e-9);
        assert!((got - best).abs() / best < 1e-5);
    }

    #[test]
    fn cases_by_budget_regime() {
        let g = [PairGains::new(1.0, 3.0, 1.0), PairGains::new(0.5, 2.0, 0.3)];
        let (p, case) = solve_df_pairs(&g, 1.0, Budgets::new(1e6, 2.0).unwrap()).unwrap();
        assert_eq!(case, DfCase::RelayLimited);
        assert!((p.total_relay() - 2.0).abs() < 1e-12);
        let (p, case) = solve_df_pairs(&g, 1.0, Budgets::new(2.0, 1e6).unwrap()).unwrap();
        assert_eq!(case, DfCase::SourceLimited);
        assert!((p.total_source() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn relay_limited_ignores_source_budget() {
        let g = [PairGains::new(1.0, 3.0, 1.0), PairGains::new(0.5, 2.0, 0.3)];
        let (a, ca) = solve_df_pairs(&g, 1.0, Budgets::new(50.0, 2.0).unwrap()).unwrap();
        let (b, cb) = solve_df_pairs(&g, 1.0, Budgets::new(100.0, 2.0).unwrap()).unwrap();
        assert_eq!((ca, cb), (DfCase::RelayLimited, DfCase::RelayLimited));
        assert_eq!(a.pr, b.pr);
    }

    #[test]
    fn stationarity_and_equalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = [false; 3];
        for _ in 0..2000 {
            let n = rng.random_range(1..6);
            let g: Vec<PairGains> = (0..n)
                .map(|_| {
                    PairGains::new(
                        rng.random_range(0.05..3.0),
                        rng.random_range(0.05..3.0),
                        rng.random_range(0.05..3.0),
                    )
                })
                .collect();
            let b = Budgets::new(
                10f64.powf(rng.random_range(-1.0..2.0)),
                10f64.powf(rng.random_range(-1.0..2.0)),
            )
            .unwrap();
            let (p, case) = solve_df_pairs(&g, 1.0, b).unwrap();
            seen[case as usize] = true;
            assert!(p.total_source() <= b.source * (1.0 + 1e-8));
            assert!(p.total_relay() <= b.relay * (1.0 + 1e-8));
            let scale = p.lambda.max(p.mu).max(1e-300);
            for i in 0..n {
                let gi = g[i];
                if p.pr[i] > 0.0 {
                    let (s_, r_) = (p.ps[i] * gi.sr, p.pr[i] * gi.rm);
                    assert!((s_ - r_).abs() <= 1e-8 * s_.max(r_));
                    assert!(p.pr[i] * gi.re <= p.ps[i] * gi.sr);
                    let lhs =
                        (gi.rm - gi.re) / (2.0 * (1.0 + p.pr[i] * gi.rm) * (1.0 + p.pr[i] * gi.re));
                    let rhs = p.mu + p.lambda * gi.rm / gi.sr;
                    // final rescale of the water-fill moves this by ~1e-12
                    assert!(
                        (lhs - rhs).abs() <= 1e-6 * scale.max(rhs),
                        "{case:?} {lhs} {rhs}"
                    );
                }
                assert!(df_rate_nats(p.ps[i], p.pr[i], gi, 1.0) >= 0.0);
            }
        }
        assert!(
            seen.iter().all(|&s| s),
            "not every case exercised: {seen:?}"
        );
    }
}

//! Brute-force references for small instances: exhaustive pairing enumeration
//! and a derivative-free power search that only evaluates the rate.

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::allocation::Assignment;
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::pairing::{solve_paired, Pairing};
use crate::power::{Budgets, PowerAllocation};
use crate::rates::{rate_nats, PairGains, RelayMode};

pub const MAX_SCP_SUBCARRIERS: usize = 8;
pub const MAX_POWER_SUBCARRIERS: usize = 4;
pub const MIN_GRID_RESOLUTION: usize = 4;
const STARTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_pairing: Pairing,
    pub best_powers: PowerAllocation,
    /// Sum secure rate in bits per OFDM symbol.
    pub best_rate: f64,
    pub evaluations: usize,
}

/// Solves power optimally for every one of the `N!` pairings and keeps the
/// best. Permutations are visited in lexicographic order and only a strictly
/// better rate replaces the incumbent.
pub fn brute_force_scp(
    realization: &ChannelRealization,
    assignment: &Assignment,
    budgets: Budgets,
    mode: RelayMode,
) -> Result<OracleResult> {
    let n = realization.num_subcarriers();
    if n > MAX_SCP_SUBCARRIERS {
        return Err(Error::TooLarge {
            n,
            max: MAX_SCP_SUBCARRIERS,
        });
    }
    let mut best: Option<OracleResult> = None;
    let mut evaluations = 0;
    for perm in (0..n).permutations(n) {
        let pairing = Pairing::new(perm)?;
        let sol = solve_paired(realization, assignment, pairing, budgets, mode)?;
        evaluations += 1;
        if best.as_ref().is_none_or(|b| sol.rate > b.best_rate) {
            best = Some(OracleResult {
                best_pairing: sol.pairing,
                best_powers: sol.powers,
                best_rate: sol.rate,
                evaluations: 0,
            });
        }
    }
    let mut best = best.expect("at least one permutation");
    best.evaluations = evaluations;
    Ok(best)
}

/// Derivative-free power search for a fixed pairing.
///
/// Each hop's powers plus a slack entry live on a scaled simplex. All grid
/// points with `grid_resolution` steps per budget are scored; the best few
/// seed a pattern search (pairwise transfers, joint transfers on both hops,
/// random directions) whose step shrinks until it falls below 1e-10 of the
/// budget. Deterministic: the random directions come from a fixed seed.
pub fn solve_power_bruteforce(
    realization: &ChannelRealization,
    assignment: &Assignment,
    pairing: &Pairing,
    budgets: Budgets,
    mode: RelayMode,
    grid_resolution: usize,
) -> Result<PowerAllocation> {
    let gains = pairing.gains_checked(realization, assignment)?;
    solve_power_bruteforce_pairs(
        &gains,
        realization.noise_variance(),
        budgets,
        mode,
        grid_resolution,
    )
}

/// [`solve_power_bruteforce`] on explicit per-pair gains.
pub fn solve_power_bruteforce_pairs(
    gains: &[PairGains],
    noise: f64,
    budgets: Budgets,
    mode: RelayMode,
    grid_resolution: usize,
) -> Result<PowerAllocation> {
    let n = gains.len();
    if n > MAX_POWER_SUBCARRIERS {
        return Err(Error::TooLarge {
            n,
            max: MAX_POWER_SUBCARRIERS,
        });
    }
    if grid_resolution < MIN_GRID_RESOLUTION {
        return Err(Error::InvalidConfig(format!(
            "grid resolution {grid_resolution} below minimum {MIN_GRID_RESOLUTION}"
        )));
    }
    if n == 0 {
        return Ok(PowerAllocation::zeros(0, mode));
    }
    let search = Search {
        gains,
        noise,
        budgets,
        mode,
    };
    let mut starts = search.grid_starts(grid_resolution);
    starts.push(Point::uniform(n));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut best: Option<(f64, Point)> = None;
    for start in starts {
        let (f, p) = search.refine(start, 1.0 / grid_resolution as f64, &mut rng);
        if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
            best = Some((f, p));
        }
    }
    let (_, p) = best.expect("at least one start");
    Ok(PowerAllocation {
        ps: p.s[..n].iter().map(|f| f * budgets.source).collect(),
        pr: p.r[..n].iter().map(|f| f * budgets.relay).collect(),
        lambda: 0.0,
        mu: 0.0,
        mode,
    })
}

/// Budget fractions; index `n` of each hop is the unused slack.
#[derive(Debug, Clone, PartialEq)]
struct Point {
    s: Vec<f64>,
    r: Vec<f64>,
}

impl Point {
    fn uniform(n: usize) -> Self {
        let mut s = vec![1.0 / n as f64; n + 1];
        s[n] = 0.0;
        Point { s: s.clone(), r: s }
    }
}

struct Search<'a> {
    gains: &'a [PairGains],
    noise: f64,
    budgets: Budgets,
    mode: RelayMode,
}

/// All compositions of `total` into `parts` non-negative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl Search<'_> {
    fn value(&self, p: &Point) -> f64 {
        self.gains
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                rate_nats(
                    self.mode,
                    p.s[i] * self.budgets.source,
                    p.r[i] * self.budgets.relay,
                    g,
                    self.noise,
                )
            })
            .sum()
    }

    fn grid_starts(&self, res: usize) -> Vec<Point> {
        let n = self.gains.len();
        let comps: Vec<Vec<f64>> = compositions(res, n + 1)
            .into_iter()
            .map(|c| c.into_iter().map(|k| k as f64 / res as f64).collect())
            .collect();
        let mut scored: Vec<(f64, usize, usize)> = Vec::with_capacity(comps.len() * comps.len());
        for (i, s) in comps.iter().enumerate() {
            for (j, r) in comps.iter().enumerate() {
                let p = Point {
                    s: s.clone(),
                    r: r.clone(),
                };
                scored.push((self.value(&p), i, j));
            }
        }
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        scored
            .into_iter()
            .take(STARTS)
            .map(|(_, i, j)| Point {
                s: comps[i].clone(),
                r: comps[j].clone(),
            })
            .collect()
    }

    /// Moves `amount` of hop mass from `from` to `to`, capped by what `from` holds.
    fn transfer(v: &mut [f64], from: usize, to: usize, amount: f64) {
        let d = amount.min(v[from]);
        v[from] -= d;
        v[to] += d;
        if v[from] < 0.0 {
            v[from] = 0.0;
        }
    }

    /// For DF, drops power on the hop that exceeds what the other hop carries;
    /// the rate never decreases.
    fn trim(&self, p: &mut Point) {
        if self.mode != RelayMode::Df {
            return;
        }
        let n = self.gains.len();
        for (i, g) in self.gains.iter().enumerate() {
            let snr_s = p.s[i] * self.budgets.source * g.sr;
            let snr_r = p.r[i] * self.budgets.relay * g.rm;
            if snr_s > snr_r {
                let keep = snr_r / (self.budgets.source * g.sr);
                p.s[n] += p.s[i] - keep;
                p.s[i] = keep;
            } else if snr_r > snr_s {
                let keep = snr_s / (self.budgets.relay * g.rm);
                p.r[n] += p.r[i] - keep;
                p.r[i] = keep;
            }
        }
    }

    /// Moves hop-SNR from `from` to `to` keeping both hops matched on each;
    /// index `n` is the slack of both hops.
    fn ridge_transfer(&self, p: &mut Point, from: usize, to: usize, step: f64) {
        let n = self.gains.len();
        let (bs, br) = (self.budgets.source, self.budgets.relay);
        let (ds, dr) = if from == n {
            (step.min(p.s[n]), step.min(p.r[n]))
        } else {
            let g = self.gains[from];
            let ds = step.min(p.s[from]);
            let dr = (ds * bs * g.sr / (br * g.rm)).min(p.r[from]);
            (ds, dr)
        };
        p.s[from] -= ds;
        p.r[from] -= dr;
        if to == n {
            p.s[n] += ds;
            p.r[n] += dr;
            return;
        }
        // the recipient may also draw on unused budget of either hop
        let (avail_s, avail_r) = (ds + p.s[n], dr + p.r[n]);
        let g = self.gains[to];
        let snr = (avail_s * bs * g.sr).min(avail_r * br * g.rm);
        let (us, ur) = (snr / (bs * g.sr), snr / (br * g.rm));
        p.s[to] += us;
        p.r[to] += ur;
        p.s[n] = (avail_s - us).max(0.0);
        p.r[n] = (avail_r - ur).max(0.0);
    }

    /// Shifts hop-SNR among three matched subcarriers so that neither budget
    /// sum changes. Returns false when the move would leave the feasible set.
    fn ridge_triple(&self, p: &mut Point, idx: [usize; 3], step: f64) -> bool {
        let (bs, br) = (self.budgets.source, self.budgets.relay);
        let x: Vec<f64> = idx.iter().map(|&i| 1.0 / (bs * self.gains[i].sr)).collect();
        let y: Vec<f64> = idx.iter().map(|&i| 1.0 / (br * self.gains[i].rm)).collect();
        let d = [
            x[1] * y[2] - x[2] * y[1],
            x[2] * y[0] - x[0] * y[2],
            x[0] * y[1] - x[1] * y[0],
        ];
        let big = (0..3)
            .map(|m| (d[m] * x[m]).abs().max((d[m] * y[m]).abs()))
            .fold(0.0, f64::max);
        if !(big > 0.0) {
            return false;
        }
        let t = step / big;
        for m in 0..3 {
            let i = idx[m];
            let (ns, nr) = (p.s[i] + t * d[m] * x[m], p.r[i] + t * d[m] * y[m]);
            if ns < 0.0 || nr < 0.0 {
                return false;
            }
            p.s[i] = ns;
            p.r[i] = nr;
        }
        true
    }

    fn random_move(p: &Point, step: f64, rng: &mut ChaCha8Rng) -> Point {
        let mut q = p.clone();
        for v in [&mut q.s, &mut q.r] {
            let mut d: Vec<f64> = (0..v.len())
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            d.iter_mut().for_each(|x| *x -= mean);
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            // largest feasible multiple up to the step
            let mut t = step / norm;
            for (x, dx) in v.iter().zip(&d) {
                if *dx < 0.0 {
                    t = t.min(x / -dx);
                }
            }
            for (x, dx) in v.iter_mut().zip(&d) {
                *x = (*x + t * dx).max(0.0);
            }
        }
        q
    }

    fn refine(&self, start: Point, initial_step: f64, rng: &mut ChaCha8Rng) -> (f64, Point) {
        let n = self.gains.len();
        let mut p = start;
        self.trim(&mut p);
        let mut f = self.value(&p);
        let mut step = initial_step;
        while step > 1e-10 {
            let mut improved = false;
            for i in 0..=n {
                for j in 0..=n {
                    if i == j {
                        continue;
                    }
                    // source hop, relay hop, both together, then along the DF ridge
                    let kinds = if self.mode == RelayMode::Df { 4 } else { 3 };
                    for which in 0..kinds {
                        loop {
                            let mut q = p.clone();
                            if which == 3 {
                                self.ridge_transfer(&mut q, i, j, step);
                            } else {
                                if which != 1 {
                                    Self::transfer(&mut q.s, i, j, step);
                                }
                                if which != 0 {
                                    Self::transfer(&mut q.r, i, j, step);
                                }
                            }
                            self.trim(&mut q);
                            let fq = self.value(&q);
                            if fq > f {
                                p = q;
                                f = fq;
                                improved = true;
                            } else {
                                break;
                            }
                        }
                    }
                }
            }
            if self.mode == RelayMode::Df {
                for (i, j, k) in (0..n).tuple_combinations() {
                    for sign in [1.0, -1.0] {
                        loop {
                            let mut q = p.clone();
                            if !self.ridge_triple(&mut q, [i, j, k], sign * step) {
                                break;
                            }
                            self.trim(&mut q);
                            let fq = self.value(&q);
                            if fq > f {
                                p = q;
                                f = fq;
                                improved = true;
                            } else {
                                break;
                            }
                        }
                    }
                }
            }
            for _ in 0..(8 * (n + 1)) {
                let mut q = Self::random_move(&p, step, rng);
                self.trim(&mut q);
                let fq = self.value(&q);
                if fq > f {
                    p = q;
                    f = fq;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        (f, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::af::optimal_relay_power;

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(4, 3).len(), 15);
        assert!(compositions(3, 2)
            .iter()
            .all(|c| c.iter().sum::<usize>() == 3));
    }

    #[test]
    fn single_af_subcarrier_closed_form() {
        let g = [PairGains::new(1.1, 2.5, 0.6)];
        let b = Budgets::new(3.0, 0.5).unwrap();
        let p = solve_power_bruteforce_pairs(&g, 1.0, b, RelayMode::Af, 6).unwrap();
        let star = optimal_relay_power(3.0, 1.1, 2.5, 0.6, 1.0);
        assert!((p.ps[0] - 3.0).abs() < 1e-6);
        assert!((p.pr[0] - star.min(0.5)).abs() < 1e-6);
        let b = Budgets::new(3.0, 50.0).unwrap();
        let p = solve_power_bruteforce_pairs(&g, 1.0, b, RelayMode::Af, 6).unwrap();
        assert!((p.pr[0] - star).abs() < 1e-4 * star);
    }

    #[test]
    fn rejects_bad_sizes() {
        let g = [PairGains::new(1.0, 2.0, 1.0); 5];
        let b = Budgets::new(1.0, 1.0).unwrap();
        assert!(matches!(
            solve_power_bruteforce_pairs(&g, 1.0, b, RelayMode::Af, 4),
            Err(Error::TooLarge { .. })
        ));
        assert!(solve_power_bruteforce_pairs(&g[..2], 1.0, b, RelayMode::Af, 3).is_err());
    }

    #[test]
    fn deterministic() {
        let g = [PairGains::new(1.0, 2.0, 1.0), PairGains::new(0.4, 3.0, 0.5)];
        let b = Budgets::new(2.0, 1.0).unwrap();
        let a = solve_power_bruteforce_pairs(&g, 1.0, b, RelayMode::Df, 5).unwrap();
        let c = solve_power_bruteforce_pairs(&g, 1.0, b, RelayMode::Df, 5).unwrap();
        assert_eq!(a, c);
    }
}

//! AF joint source/relay power allocation.
//!
//! With the relay budget slack the problem collapses onto the curve
//! `pr = pr*(ps)` and becomes a concave water-fill in the source multiplier.
//! When the relay budget binds, both multipliers are searched: the source
//! stationarity condition gives `ps` in closed form for a given `(lambda, pr)`,
//! which leaves a scalar equation in `pr` per subcarrier. The objective is not
//! jointly concave near zero power, so the nested search can stall on a jump;
//! a pruning pass over the set of powered subcarriers recovers from that.

use crate::allocation::Assignment;
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::pairing::Pairing;
use crate::power::{Budgets, PowerAllocation};
use crate::rates::{af_rate_nats, PairGains, RelayMode};
use crate::roots::{bracketed, golden_max};

const MAX_ITER: usize = 200;
const BUDGET_RTOL: f64 = 1e-8;

/// Relay power maximizing the AF secure rate for a fixed source power.
pub fn optimal_relay_power(ps: f64, g_sr: f64, g_rm: f64, g_re: f64, noise: f64) -> f64 {
    ((noise * noise + ps * g_sr * noise) / (g_rm * g_re)).sqrt()
}

/// Derivative of the pair rate (nats) with respect to source power.
pub fn rate_gradient_source(ps: f64, pr: f64, g: PairGains, noise: f64) -> f64 {
    Link::new(g, noise).d_source(ps, pr)
}

/// Derivative of the pair rate (nats) with respect to relay power.
pub fn rate_gradient_relay(ps: f64, pr: f64, g: PairGains, noise: f64) -> f64 {
    Link::new(g, noise).d_relay(ps, pr)
}

/// Second derivatives `(d2/dps2, d2/dpr2, d2/dps dpr)` of the pair rate in nats,
/// from the closed-form expressions.
pub fn rate_hessian(ps: f64, pr: f64, g: PairGains, noise: f64) -> (f64, f64, f64) {
    let (a, b, c, s) = (g.sr, g.rm, g.re, noise);
    let x = s + a * ps;
    let db = x + pr * b;
    let dc = x + pr * c;
    let h_ss = 0.5 * a * a * (1.0 / (db * db) - 1.0 / (dc * dc));
    let eb = s + pr * b;
    let ec = s + pr * c;
    let h_rr =
        0.5 * (c * c / (ec * ec) - b * b / (eb * eb) + b * b / (db * db) - c * c / (dc * dc));
    let h_sr = 0.5 * a * (b / (db * db) - c / (dc * dc));
    (h_ss, h_rr, h_sr)
}

/// Second derivatives of the argument of the logarithm in the AF rate,
/// `O = (s + pr b)(s + ps a + pr c) / ((s + pr c)(s + ps a + pr b))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperandHessian {
    pub ss: f64,
    pub rr: f64,
    pub sr: f64,
    /// `ss * rr - sr^2`, evaluated in factored form.
    pub det: f64,
}

pub fn operand_hessian(ps: f64, pr: f64, g: PairGains, noise: f64) -> OperandHessian {
    let (a, b, c, s) = (g.sr, g.rm, g.re, noise);
    let x = s + a * ps;
    let d = b - c;
    let ec = c * pr + s;
    let eb = b * pr + s;
    let t = eb + a * ps;
    let bc2 = b * c * pr * pr;
    let ss = -2.0 * a * a * pr * d * eb / (ec * t.powi(3));
    let sr = a * d * (a * ps * (bc2 + 2.0 * b * pr * s + s * s) - eb * (bc2 - s * s))
        / (ec * ec * t.powi(3));
    let rr = -2.0 * a * ps * d * (b * c * pr * (3.0 * s * x - bc2) + s * x * (b * s + c * x))
        / (ec.powi(3) * t.powi(3));
    let det = a
        * a
        * d
        * d
        * ((bc2 - s * s) * (s * s + 4.0 * a * ps * s - bc2) + 4.0 * a * ps * s * s * ec)
        / (ec.powi(4) * t.powi(4));
    OperandHessian { ss, rr, sr, det }
}

#[derive(Debug, Clone, Copy)]
struct Link {
    a: f64,
    b: f64,
    c: f64,
    s: f64,
}

/// Per-subcarrier state of the relay-tight search at a fixed `lambda`.
#[derive(Debug, Clone, Copy)]
struct Branch {
    top: f64,
    peak_pr: f64,
    peak: f64,
}

impl Link {
    fn new(g: PairGains, noise: f64) -> Self {
        Link {
            a: g.sr,
            b: g.rm,
            c: g.re,
            s: noise,
        }
    }

    fn rate(&self, ps: f64, pr: f64) -> f64 {
        af_rate_nats(ps, pr, PairGains::new(self.a, self.b, self.c), self.s)
    }

    fn d_source(&self, ps: f64, pr: f64) -> f64 {
        let Link { a, b, c, s } = *self;
        let x = s + a * ps;
        0.5 * pr * a * (b - c) / ((x + pr * b) * (x + pr * c))
    }

    fn d_relay(&self, ps: f64, pr: f64) -> f64 {
        let Link { a, b, c, s } = *self;
        let x = s + a * ps;
        0.5 * ps * a * (b - c) * (s * x - b * c * pr * pr)
            / ((x + pr * b) * (x + pr * c) * (s + pr * b) * (s + pr * c))
    }

    fn relay_star(&self, ps: f64) -> f64 {
        optimal_relay_power(ps, self.a, self.b, self.c, self.s)
    }

    fn k(&self) -> f64 {
        (self.s / (self.b * self.c)).sqrt()
    }

    /// Source marginal along `pr = pr*(ps)` at `ps = 0`.
    fn lambda_zero(&self) -> f64 {
        let Link { a, b, c, s } = *self;
        let k = self.k();
        let t = s.sqrt();
        0.5 * a * (b - c) * k / (t * (t + k * b) * (t + k * c))
    }

    /// Largest `lambda` for which some `pr` still gives positive source power.
    fn lambda_cap(&self) -> f64 {
        let Link { a, b, c, s } = *self;
        let r = b.sqrt() + c.sqrt();
        0.5 * a * (b - c) / (s * r * r)
    }

    /// Point on the `pr = pr*(ps)` curve with source marginal `lambda`.
    fn phase1(&self, lambda: f64) -> (f64, f64) {
        if lambda >= self.lambda_zero() {
            return (0.0, 0.0);
        }
        let Link { a, b, c, s } = *self;
        let k = self.k();
        let target = 0.5 * a * (b - c) * k / lambda;
        let (u, v) = (k * b, k * c);
        // t (t + u)(t + v) = target, increasing and convex for t > 0
        let mut t = target.cbrt().max(s.sqrt());
        for _ in 0..100 {
            let g = t * (t + u) * (t + v) - target;
            let dg = 3.0 * t * t + 2.0 * (u + v) * t + u * v;
            let step = g / dg;
            t -= step;
            if step.abs() <= 1e-15 * t {
                break;
            }
        }
        let ps = ((t * t - s) / a).max(0.0);
        (ps, k * t)
    }

    /// Source power meeting the source stationarity condition at `(lambda, pr)`.
    fn source_given_relay(&self, lambda: f64, pr: f64) -> f64 {
        let Link { a, b, c, s } = *self;
        let kk = 0.5 * pr * a * (b - c) / lambda;
        let num = kk - pr * pr * b * c;
        if num <= 0.0 {
            return 0.0;
        }
        let d = pr * (b - c);
        let x = 2.0 * num / (pr * (b + c) + (d * d + 4.0 * kk).sqrt());
        ((x - s) / a).max(0.0)
    }

    fn psi(&self, lambda: f64, pr: f64) -> f64 {
        self.d_relay(self.source_given_relay(lambda, pr), pr)
    }

    fn branch(&self, lambda: f64) -> Option<Branch> {
        if lambda >= self.lambda_cap() {
            return None;
        }
        let Link { a, b, c, s } = *self;
        let bp = 0.5 * a * (b - c) - lambda * s * (b + c);
        if bp <= 0.0 {
            return None;
        }
        let disc = (bp * bp - 4.0 * lambda * lambda * b * c * s * s).max(0.0);
        let root = bp + disc.sqrt();
        let lo = 2.0 * lambda * s * s / root;
        let hi = root / (2.0 * lambda * b * c);
        let top = if lambda < self.lambda_zero() {
            self.phase1(lambda).1.min(hi)
        } else {
            hi
        };
        if !(top > lo) {
            return None;
        }
        let (peak_pr, peak) = golden_max(|pr| self.psi(lambda, pr), lo, top, 1e-11);
        if !(peak > 0.0) {
            return None;
        }
        Some(Branch { top, peak_pr, peak })
    }

    /// Relay power where `psi = mu` on the descending side of the branch, or
    /// `None` when `mu` is above the peak. `[lo, hi]` narrows the search
    /// inside `[peak_pr, top]` and is ignored if it does not bracket.
    fn relay_root(&self, lambda: f64, br: &Branch, mu: f64, lo: f64, hi: f64) -> Option<f64> {
        if mu <= 0.0 {
            return Some(br.top);
        }
        if mu >= br.peak {
            return None;
        }
        let f = |pr: f64| self.psi(lambda, pr) - mu;
        let mut bracket = (br.peak_pr, br.top, br.peak - mu, -mu);
        if lo > br.peak_pr || hi < br.top {
            let (f_lo, f_hi) = (f(lo), f(hi));
            if lo <= hi && f_lo >= 0.0 && f_hi <= 0.0 {
                bracket = (lo, hi, f_lo, f_hi);
            }
        }
        let (lo, hi, f_lo, f_hi) = bracket;
        Some(bracketed(f, lo, hi, f_lo, f_hi, 1e-14 * mu, 1e-15, MAX_ITER).x)
    }

    /// Local-maximum response `(ps, pr)` for a relay root.
    fn response(&self, lambda: f64, root: Option<f64>) -> (f64, f64) {
        match root {
            Some(pr) => {
                let ps = self.source_given_relay(lambda, pr);
                if ps > 0.0 {
                    (ps, pr)
                } else {
                    (0.0, 0.0)
                }
            }
            None => (0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    ps: Vec<f64>,
    pr: Vec<f64>,
    lambda: f64,
    mu: f64,
    rate: f64,
}

impl Candidate {
    fn empty(n: usize) -> Self {
        Candidate {
            ps: vec![0.0; n],
            pr: vec![0.0; n],
            lambda: 0.0,
            mu: 0.0,
            rate: 0.0,
        }
    }
}

struct Solver<'a> {
    links: &'a [Link],
    budgets: Budgets,
}

impl Solver<'_> {
    fn total_rate(&self, ps: &[f64], pr: &[f64]) -> f64 {
        self.links
            .iter()
            .zip(ps.iter().zip(pr))
            .map(|(l, (&p, &q))| l.rate(p, q))
            .sum()
    }

    fn finish(&self, ps: Vec<f64>, pr: Vec<f64>, lambda: f64, mu: f64) -> Candidate {
        let rate = self.total_rate(&ps, &pr);
        Candidate {
            ps,
            pr,
            lambda,
            mu,
            rate,
        }
    }

    /// Relay-slack water-fill over `active`. Returns the allocation; the
    /// caller checks the relay budget.
    fn phase1(&self, active: &[usize]) -> Candidate {
        let n = self.links.len();
        let p_s = self.budgets.source;
        let sum_ps =
            |lambda: f64| -> f64 { active.iter().map(|&i| self.links[i].phase1(lambda).0).sum() };
        let hi = active
            .iter()
            .map(|&i| self.links[i].lambda_zero())
            .fold(0.0, f64::max);
        let (mut lo, mut f_lo) = (hi.ln() - 30.0, 0.0);
        for _ in 0..40 {
            f_lo = sum_ps(lo.exp()) - p_s;
            if f_lo > 0.0 {
                break;
            }
            lo -= 30.0;
        }
        let root = bracketed(
            |u| sum_ps(u.exp()) - p_s,
            lo,
            hi.ln(),
            f_lo,
            -p_s,
            1e-13 * p_s,
            1e-16,
            MAX_ITER,
        );
        let u = if root.fx <= 1e-13 * p_s {
            root.x
        } else {
            root.hi
        };
        let lambda = u.exp();
        let mut ps = vec![0.0; n];
        let mut pr = vec![0.0; n];
        for &i in active {
            let (p, q) = self.links[i].phase1(lambda);
            if p > 0.0 {
                ps[i] = p;
                pr[i] = q;
            }
        }
        self.finish(ps, pr, lambda, 0.0)
    }

    /// Relay multiplier and responses at a fixed `lambda`.
    fn at_lambda(&self, active: &[usize], lambda: f64) -> (f64, Vec<(usize, f64, f64)>) {
        let p_r = self.budgets.relay;
        let branches: Vec<(usize, Branch)> = active
            .iter()
            .filter_map(|&i| self.links[i].branch(lambda).map(|b| (i, b)))
            .collect();
        // Roots are monotone in mu, so the nearest multipliers already tried
        // on either side bracket each new root.
        let mut seen: Vec<(f64, Vec<Option<f64>>)> = Vec::new();
        let mut respond = |mu: f64| -> Vec<(usize, f64, f64)> {
            let below = seen
                .iter()
                .filter(|(m, _)| *m < mu)
                .max_by(|x, y| x.0.total_cmp(&y.0));
            let above = seen
                .iter()
                .filter(|(m, _)| *m > mu)
                .min_by(|x, y| x.0.total_cmp(&y.0));
            let roots: Vec<Option<f64>> = branches
                .iter()
                .enumerate()
                .map(|(k, (i, br))| {
                    let hi = below.and_then(|(_, r)| r[k]).unwrap_or(br.top);
                    let lo = above.and_then(|(_, r)| r[k]).unwrap_or(br.peak_pr);
                    self.links[*i].relay_root(lambda, br, mu, lo, hi)
                })
                .collect();
            let out = branches
                .iter()
                .zip(&roots)
                .map(|((i, _), &r)| {
                    let (p, q) = self.links[*i].response(lambda, r);
                    (*i, p, q)
                })
                .collect();
            seen.push((mu, roots));
            out
        };
        let mut sum_pr = |mu: f64| -> f64 { respond(mu).iter().map(|&(_, _, q)| q).sum() };
        if branches.is_empty() {
            return (0.0, Vec::new());
        }
        let f0 = sum_pr(0.0) - p_r;
        if f0 <= 0.0 {
            return (0.0, respond(0.0));
        }
        let peak = branches.iter().map(|(_, b)| b.peak).fold(0.0, f64::max);
        let hi = (peak * (1.0 + 1e-12)).ln();
        let mut lo = hi - 30.0;
        let mut f_lo = sum_pr(lo.exp()) - p_r;
        let mut tries = 0;
        while f_lo <= 0.0 && tries < 20 {
            lo -= 30.0;
            f_lo = sum_pr(lo.exp()) - p_r;
            tries += 1;
        }
        if f_lo <= 0.0 {
            return (0.0, respond(0.0));
        }
        let root = bracketed(
            |u| sum_pr(u.exp()) - p_r,
            lo,
            hi,
            f_lo,
            -p_r,
            1e-12 * p_r,
            1e-16,
            MAX_ITER,
        );
        let u = if root.fx.abs() <= 1e-12 * p_r {
            root.x
        } else {
            root.hi
        };
        let mu = u.exp();
        (mu, respond(mu))
    }

    fn phase2(&self, active: &[usize]) -> Candidate {
        let n = self.links.len();
        let p_s = self.budgets.source;
        let sum_ps = |lambda: f64| -> f64 {
            self.at_lambda(active, lambda)
                .1
                .iter()
                .map(|&(_, p, _)| p)
                .sum::<f64>()
        };
        let cap = active
            .iter()
            .map(|&i| self.links[i].lambda_cap())
            .fold(0.0, f64::max);
        if !(cap > 0.0) {
            return Candidate::empty(n);
        }
        let hi = (cap * (1.0 - 1e-12)).ln();
        // source power on any subcarrier is bounded by a(b-c)/(2 lambda a (b+c))
        let bound: f64 = active
            .iter()
            .map(|&i| {
                let l = &self.links[i];
                0.5 * (l.b - l.c) / (l.b + l.c)
            })
            .sum::<f64>()
            / p_s;
        let mut lo = bound.min(cap).ln() - 2.0;
        let mut f_lo = sum_ps(lo.exp()) - p_s;
        let mut tries = 0;
        while f_lo <= 0.0 && tries < 20 {
            lo -= 10.0;
            f_lo = sum_ps(lo.exp()) - p_s;
            tries += 1;
        }
        let f_hi = sum_ps(hi.exp()) - p_s;
        let u = if f_lo <= 0.0 {
            lo
        } else if f_hi >= 0.0 {
            hi
        } else {
            let root = bracketed(
                |u| sum_ps(u.exp()) - p_s,
                lo,
                hi,
                f_lo,
                f_hi,
                1e-12 * p_s,
                1e-16,
                MAX_ITER,
            );
            if root.fx.abs() <= 1e-12 * p_s {
                root.x
            } else {
                root.hi
            }
        };
        let lambda = u.exp();
        let (mu, resp) = self.at_lambda(active, lambda);
        let mut ps = vec![0.0; n];
        let mut pr = vec![0.0; n];
        for (i, p, q) in resp {
            ps[i] = p;
            pr[i] = q;
        }
        self.finish(ps, pr, lambda, mu)
    }

    /// Single powered subcarrier: all source power, relay at `min(P_R, pr*)`.
    fn single(&self, i: usize) -> Candidate {
        let n = self.links.len();
        let l = &self.links[i];
        let p = self.budgets.source;
        let q = self.budgets.relay.min(l.relay_star(p));
        let mut ps = vec![0.0; n];
        let mut pr = vec![0.0; n];
        ps[i] = p;
        pr[i] = q;
        let lambda = l.d_source(p, q);
        let mu = l.d_relay(p, q).max(0.0);
        self.finish(ps, pr, lambda, mu)
    }

    fn relay_tight(&self, active: &[usize]) -> Candidate {
        if active.len() == 1 {
            return self.single(active[0]);
        }
        self.phase2(active)
    }

    fn solve(&self, secure: &[usize]) -> Candidate {
        let n = self.links.len();
        if secure.is_empty() {
            return Candidate::empty(n);
        }
        if secure.len() == 1 {
            return self.single(secure[0]);
        }
        let p1 = self.phase1(secure);
        if p1.pr.iter().sum::<f64>() <= self.budgets.relay * (1.0 + 1e-12) {
            return p1;
        }

        let mut best = self.relay_tight(secure);
        let mut active: Vec<usize> = secure.to_vec();
        loop {
            let powered: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&i| best.ps[i] > 0.0)
                .collect();
            let next = if powered.len() < active.len() && !powered.is_empty() {
                powered
            } else if active.len() > 1 {
                // drop the subcarrier contributing the least rate
                let weakest = *active
                    .iter()
                    .min_by(|&&i, &&j| {
                        let ri = self.links[i].rate(best.ps[i], best.pr[i]);
                        let rj = self.links[j].rate(best.ps[j], best.pr[j]);
                        ri.total_cmp(&rj)
                    })
                    .expect("non-empty");
                active.iter().copied().filter(|&i| i != weakest).collect()
            } else {
                break;
            };
            let cand = self.relay_tight(&next);
            let dropping_dead = next.len() < active.len()
                && active
                    .iter()
                    .all(|&i| next.contains(&i) || best.ps[i] == 0.0);
            if cand.rate > best.rate * (1.0 + 1e-13) || (dropping_dead && cand.rate >= best.rate) {
                best = cand;
                active = next;
            } else {
                break;
            }
        }
        for &i in secure {
            let c = self.single(i);
            if c.rate > best.rate * (1.0 + 1e-13) {
                best = c;
            }
        }
        best
    }
}

/// AF power allocation for explicit per-pair gains.
pub fn solve_af_pairs(
    gains: &[PairGains],
    noise: f64,
    budgets: Budgets,
) -> Result<PowerAllocation> {
    if !(noise.is_finite() && noise > 0.0) {
        return Err(Error::InvalidConfig(
            "noise variance must be positive".into(),
        ));
    }
    for g in gains {
        if !(g.sr.is_finite() && g.rm.is_finite() && g.re.is_finite()) {
            return Err(Error::NonFinite("channel gain"));
        }
        if g.sr <= 0.0 || g.rm <= 0.0 || g.re <= 0.0 {
            return Err(Error::InvalidConfig(
                "channel gains must be positive".into(),
            ));
        }
    }
    let links: Vec<Link> = gains.iter().map(|&g| Link::new(g, noise)).collect();
    let secure: Vec<usize> = (0..links.len()).filter(|&i| gains[i].is_secure()).collect();
    let solver = Solver {
        links: &links,
        budgets,
    };
    let best = solver.solve(&secure);
    let sum_ps: f64 = best.ps.iter().sum();
    let sum_pr: f64 = best.pr.iter().sum();
    let finite = best.ps.iter().chain(&best.pr).all(|v| v.is_finite())
        && best.lambda.is_finite()
        && best.mu.is_finite();
    let over = (sum_ps - budgets.source).max(0.0) / budgets.source
        + (sum_pr - budgets.relay).max(0.0) / budgets.relay;
    if !finite || over > BUDGET_RTOL {
        return Err(Error::NoConvergence {
            what: "AF power allocation",
            iterations: MAX_ITER,
            residual: if finite { over } else { f64::NAN },
        });
    }
    Ok(PowerAllocation {
        ps: best.ps,
        pr: best.pr,
        lambda: best.lambda,
        mu: best.mu,
        mode: RelayMode::Af,
    })
}

/// AF power allocation for a paired, allocated realization.
pub fn solve_af(
    realization: &ChannelRealization,
    assignment: &Assignment,
    pairing: &Pairing,
    budgets: Budgets,
) -> Result<PowerAllocation> {
    let gains = pairing.gains_checked(realization, assignment)?;
    solve_af_pairs(&gains, realization.noise_variance(), budgets)
}

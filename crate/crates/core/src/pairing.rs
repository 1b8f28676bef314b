//! Subcarrier pairing: which relay-user subcarrier forwards the data received
//! on each source-relay subcarrier.

use crate::allocation::Assignment;
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::power::af::solve_af;
use crate::power::df::{secure_waterfill, solve_df, DfCase};
use crate::power::{Budgets, PowerAllocation};
use crate::rates::{PairGains, RelayMode};

/// Permutation mapping source-relay subcarrier `n` to relay-user subcarrier
/// `perm[n]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pairing {
    perm: Vec<usize>,
}

impl Pairing {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &o in &perm {
            if o >= n {
                return Err(Error::InvalidPairing(format!(
                    "index {o} out of range for N = {n}"
                )));
            }
            if seen[o] {
                return Err(Error::InvalidPairing(format!("index {o} used twice")));
            }
            seen[o] = true;
        }
        Ok(Pairing { perm })
    }

    pub fn identity(n: usize) -> Self {
        Pairing {
            perm: (0..n).collect(),
        }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn partner(&self, n: usize) -> usize {
        self.perm[n]
    }

    /// `(self ∘ other)[n] = self[other[n]]`.
    pub fn compose(&self, other: &Pairing) -> Result<Pairing> {
        self.check_len(other.len())?;
        Ok(Pairing {
            perm: other.perm.iter().map(|&i| self.perm[i]).collect(),
        })
    }

    pub fn inverse(&self) -> Pairing {
        let mut inv = vec![0; self.len()];
        for (n, &o) in self.perm.iter().enumerate() {
            inv[o] = n;
        }
        Pairing { perm: inv }
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.perm.len() != n {
            return Err(Error::Dimension(format!(
                "pairing has {} entries, expected {n}",
                self.perm.len()
            )));
        }
        Ok(())
    }

    /// Gains of each pair `(n, perm[n])`.
    pub fn pair_gains(
        &self,
        realization: &ChannelRealization,
        assignment: &Assignment,
    ) -> Vec<PairGains> {
        let sr = realization.gain_sr();
        self.perm
            .iter()
            .enumerate()
            .map(|(n, &o)| PairGains::new(sr[n], assignment.gain_rm[o], assignment.gain_re[o]))
            .collect()
    }

    pub(crate) fn gains_checked(
        &self,
        realization: &ChannelRealization,
        assignment: &Assignment,
    ) -> Result<Vec<PairGains>> {
        let n = realization.num_subcarriers();
        self.check_len(n)?;
        if assignment.len() != n {
            return Err(Error::Dimension(format!(
                "assignment covers {} subcarriers, realization has {n}",
                assignment.len()
            )));
        }
        Ok(self.pair_gains(realization, assignment))
    }
}

/// Indices sorted by key descending, ties by index.
fn rank(keys: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&i, &j| keys[j].total_cmp(&keys[i]).then(i.cmp(&j)));
    idx
}

/// Pairs the k-th largest source key with the k-th largest relay key.
pub fn rank_match(source_keys: &[f64], relay_keys: &[f64]) -> Result<Pairing> {
    if source_keys.len() != relay_keys.len() {
        return Err(Error::Dimension(format!(
            "{} source keys vs {} relay keys",
            source_keys.len(),
            relay_keys.len()
        )));
    }
    let src = rank(source_keys);
    let dst = rank(relay_keys);
    let mut perm = vec![0; src.len()];
    for (&n, &o) in src.iter().zip(&dst) {
        perm[n] = o;
    }
    Ok(Pairing { perm })
}

fn check_dims(realization: &ChannelRealization, assignment: &Assignment) -> Result<()> {
    if assignment.len() != realization.num_subcarriers() {
        return Err(Error::Dimension(format!(
            "assignment covers {} subcarriers, realization has {}",
            assignment.len(),
            realization.num_subcarriers()
        )));
    }
    Ok(())
}

/// Subcarrier `n` forwards on subcarrier `n`.
pub fn pair_default(n: usize) -> Pairing {
    Pairing::identity(n)
}

/// Ordered pairing: strongest source-relay gain with strongest winner gain,
/// ignoring the eavesdropper.
pub fn pair_ordered(realization: &ChannelRealization, assignment: &Assignment) -> Result<Pairing> {
    check_dims(realization, assignment)?;
    rank_match(realization.gain_sr(), &assignment.gain_rm)
}

/// AF pairing key of a relay-user subcarrier.
pub fn af_relay_key(g_rm: f64, g_re: f64) -> f64 {
    (g_rm - g_re) / (g_rm * g_re).sqrt()
}

/// AF pairing: source-relay gains matched against `(g_rm - g_re)/sqrt(g_rm g_re)`.
pub fn pair_af(realization: &ChannelRealization, assignment: &Assignment) -> Result<Pairing> {
    check_dims(realization, assignment)?;
    let keys: Vec<f64> = assignment
        .gain_rm
        .iter()
        .zip(&assignment.gain_re)
        .map(|(&b, &c)| af_relay_key(b, c))
        .collect();
    rank_match(realization.gain_sr(), &keys)
}

fn df_relay_limited_pairing(
    realization: &ChannelRealization,
    assignment: &Assignment,
    budgets: Budgets,
) -> Result<(Pairing, f64)> {
    let noise = realization.noise_variance();
    let wf = secure_waterfill(
        &assignment.gain_rm,
        &assignment.gain_re,
        budgets.relay,
        noise,
    )?;
    let keys: Vec<f64> = wf
        .powers
        .iter()
        .zip(&assignment.gain_rm)
        .map(|(p, g)| p * g)
        .collect();
    let pairing = rank_match(realization.gain_sr(), &keys)?;
    let sr = realization.gain_sr();
    let source_need: f64 = pairing
        .perm
        .iter()
        .enumerate()
        .map(|(n, &o)| keys[o] / sr[n])
        .sum();
    Ok((pairing, source_need))
}

fn df_source_limited_pairing(
    realization: &ChannelRealization,
    assignment: &Assignment,
) -> Result<Pairing> {
    let keys: Vec<f64> = assignment
        .gain_rm
        .iter()
        .zip(&assignment.gain_re)
        .map(|(&b, &c)| b / c)
        .collect();
    rank_match(realization.gain_sr(), &keys)
}

/// DF pairing together with the budget regime it was built for.
///
/// With the relay budget binding, relay powers come from a water-fill over the
/// relay-user subcarriers alone and the source needs power `pr g_rm / g_sr`
/// per pair; matching strong source gains with large `pr g_rm` minimizes that
/// need. If even the best matching exceeds the source budget, pairs are
/// matched on `g_rm / g_re` instead.
pub fn pair_df(
    realization: &ChannelRealization,
    assignment: &Assignment,
    budgets: Budgets,
) -> Result<(Pairing, DfCase)> {
    check_dims(realization, assignment)?;
    let (pairing, need) = df_relay_limited_pairing(realization, assignment, budgets)?;
    if need <= budgets.source * (1.0 + 1e-12) {
        return Ok((pairing, DfCase::RelayLimited));
    }
    Ok((
        df_source_limited_pairing(realization, assignment)?,
        DfCase::SourceLimited,
    ))
}

/// Result of a pairing scheme followed by optimal power allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSolution {
    pub pairing: Pairing,
    pub powers: PowerAllocation,
    /// Sum secure rate in bits per OFDM symbol.
    pub rate: f64,
    pub case: Option<DfCase>,
}

/// DF pairing and power allocation with one re-pairing pass if the solver
/// lands in a different budget regime than the pairing assumed.
pub fn opt_scp_df(
    realization: &ChannelRealization,
    assignment: &Assignment,
    budgets: Budgets,
) -> Result<PairedSolution> {
    let (pairing, assumed) = pair_df(realization, assignment, budgets)?;
    let first = solve_paired_df(realization, assignment, pairing, budgets)?;
    let found = first.case.expect("DF case");
    if found == assumed {
        return Ok(first);
    }
    let repaired = match found {
        DfCase::RelayLimited => df_relay_limited_pairing(realization, assignment, budgets)?.0,
        DfCase::SourceLimited => df_source_limited_pairing(realization, assignment)?,
        DfCase::BothTight => {
            let mut keys = vec![0.0; first.pairing.len()];
            for (n, &o) in first.pairing.perm.iter().enumerate() {
                keys[o] = first.powers.pr[n] * assignment.gain_rm[o];
            }
            rank_match(realization.gain_sr(), &keys)?
        }
    };
    if repaired == first.pairing {
        return Ok(first);
    }
    let second = solve_paired_df(realization, assignment, repaired, budgets)?;
    Ok(if second.rate > first.rate {
        second
    } else {
        first
    })
}

/// AF pairing followed by optimal power allocation.
pub fn opt_scp_af(
    realization: &ChannelRealization,
    assignment: &Assignment,
    budgets: Budgets,
) -> Result<PairedSolution> {
    let pairing = pair_af(realization, assignment)?;
    solve_paired(realization, assignment, pairing, budgets, RelayMode::Af)
}

/// Optimal pairing heuristic for either mode.
pub fn opt_scp(
    realization: &ChannelRealization,
    assignment: &Assignment,
    budgets: Budgets,
    mode: RelayMode,
) -> Result<PairedSolution> {
    match mode {
        RelayMode::Af => opt_scp_af(realization, assignment, budgets),
        RelayMode::Df => opt_scp_df(realization, assignment, budgets),
    }
}

fn solve_paired_df(
    realization: &ChannelRealization,
    assignment: &Assignment,
    pairing: Pairing,
    budgets: Budgets,
) -> Result<PairedSolution> {
    let (powers, case) = solve_df(realization, assignment, &pairing, budgets)?;
    let rate =
        crate::rates::sum_secure_rate(realization, assignment, &pairing, &powers, RelayMode::Df)?
            .sum;
    Ok(PairedSolution {
        pairing,
        powers,
        rate,
        case: Some(case),
    })
}

/// Optimal power allocation for a fixed pairing.
pub fn solve_paired(
    realization: &ChannelRealization,
    assignment: &Assignment,
    pairing: Pairing,
    budgets: Budgets,
    mode: RelayMode,
) -> Result<PairedSolution> {
    match mode {
        RelayMode::Df => solve_paired_df(realization, assignment, pairing, budgets),
        RelayMode::Af => {
            let powers = solve_af(realization, assignment, &pairing, budgets)?;
            let rate = crate::rates::sum_secure_rate(
                realization,
                assignment,
                &pairing,
                &powers,
                RelayMode::Af,
            )?
            .sum;
            Ok(PairedSolution {
                pairing,
                powers,
                rate,
                case: None,
            })
        }
    }
}

/// Effective channel gain per pair, the water-filling priority under high SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveGains {
    pub value: Vec<f64>,
    pub mode: RelayMode,
}

pub fn effective_gain(g: PairGains, mode: RelayMode) -> f64 {
    if g.rm == g.re {
        return 0.0;
    }
    match mode {
        RelayMode::Df => (g.rm / g.re - 1.0) / g.sr,
        RelayMode::Af => (g.rm - g.re) / (g.sr * g.rm * g.re).sqrt(),
    }
}

pub fn effective_gains(
    realization: &ChannelRealization,
    assignment: &Assignment,
    pairing: &Pairing,
    mode: RelayMode,
) -> Result<EffectiveGains> {
    let gains = pairing.gains_checked(realization, assignment)?;
    Ok(EffectiveGains {
        value: gains.iter().map(|&g| effective_gain(g, mode)).collect(),
        mode,
    })
}

/// Population variance of the effective gains.
pub fn gain_variance(gains: &EffectiveGains) -> f64 {
    let n = gains.value.len();
    if n == 0 {
        return 0.0;
    }
    let mean = gains.value.iter().sum::<f64>() / n as f64;
    gains
        .value
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(sr: Vec<f64>, ru: Vec<Vec<f64>>) -> (ChannelRealization, Assignment) {
        let r = ChannelRealization::new(sr, ru, 1.0).unwrap();
        let a = crate::allocation::allocate(&r);
        (r, a)
    }

    #[test]
    fn bijection_checked() {
        assert!(Pairing::new(vec![0, 2, 1]).is_ok());
        assert!(Pairing::new(vec![0, 0, 1]).is_err());
        assert!(Pairing::new(vec![0, 3, 1]).is_err());
        assert!(Pairing::new(vec![]).is_ok());
    }

    #[test]
    fn default_is_identity() {
        assert_eq!(pair_default(3).as_slice(), &[0, 1, 2]);
        assert_eq!(pair_default(1).as_slice(), &[0]);
        let p = Pairing::new(vec![2, 0, 1]).unwrap();
        assert_eq!(pair_default(3).compose(&p).unwrap(), p);
        assert_eq!(p.compose(&pair_default(3)).unwrap(), p);
        assert_eq!(p.compose(&p.inverse()).unwrap(), pair_default(3));
    }

    #[test]
    fn ordered_rank_matching() {
        let (r, a) = real(vec![3.0, 1.0], vec![vec![2.0, 5.0], vec![0.1, 0.1]]);
        assert_eq!(pair_ordered(&r, &a).unwrap().as_slice(), &[1, 0]);
        let (r, a) = real(vec![3.0, 1.0], vec![vec![5.0, 2.0], vec![0.1, 0.1]]);
        assert_eq!(pair_ordered(&r, &a).unwrap().as_slice(), &[0, 1]);
    }

    #[test]
    fn af_pairing_identity_when_cosorted() {
        let (r, a) = real(
            vec![3.0, 2.0, 1.0],
            vec![vec![8.0, 4.0, 2.0], vec![1.0, 1.0, 1.0]],
        );
        assert_eq!(pair_af(&r, &a).unwrap(), Pairing::identity(3));
        let (r, a) = real(vec![1.0], vec![vec![2.0], vec![1.0]]);
        assert_eq!(pair_af(&r, &a).unwrap(), Pairing::identity(1));
    }

    #[test]
    fn df_pairing_regimes() {
        let (r, a) = real(
            vec![0.5, 2.0, 1.0],
            vec![vec![3.0, 1.5, 0.4], vec![1.0, 1.0, 0.3]],
        );
        let (_, case) = pair_df(&r, &a, Budgets::new(1e9, 1.0).unwrap()).unwrap();
        assert_eq!(case, DfCase::RelayLimited);
        let (p, case) = pair_df(&r, &a, Budgets::new(1.0, 1e9).unwrap()).unwrap();
        assert_eq!(case, DfCase::SourceLimited);
        // keys g_rm/g_re = 3, 1.5, 1.33; source order 1, 2, 0
        assert_eq!(p.as_slice(), &[2, 0, 1]);
    }

    #[test]
    fn effective_gain_values() {
        let g = PairGains::new(1.0, 4.0, 1.0);
        assert_eq!(effective_gain(g, RelayMode::Df), 3.0);
        assert_eq!(effective_gain(g, RelayMode::Af), 1.5);
        assert_eq!(
            effective_gain(PairGains::new(1.0, 2.0, 2.0), RelayMode::Af),
            0.0
        );
    }

    #[test]
    fn variance_values() {
        let v = |x: Vec<f64>| {
            gain_variance(&EffectiveGains {
                value: x,
                mode: RelayMode::Df,
            })
        };
        assert_eq!(v(vec![2.0, 2.0, 2.0]), 0.0);
        assert_eq!(v(vec![1.0, 3.0]), 1.0);
        let x = vec![0.3, 1.7, 4.2];
        let m = (0.3 + 1.7 + 4.2) / 3.0;
        let two_pass = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 3.0;
        assert!((v(x) - two_pass).abs() < 1e-15);
    }
}

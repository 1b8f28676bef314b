//! Secure-rate evaluation for amplify-and-forward and decode-and-forward
//! relaying.
//!
//! Internally everything is in nats with the half-duplex factor of one half
//! applied; the public evaluators convert to bits. The `[.]^+` clamp is
//! applied per subcarrier pair, never on the sum.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use crate::allocation::Assignment;
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::pairing::Pairing;
use crate::power::PowerAllocation;

/// Relay operating mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelayMode {
    /// Amplify-and-forward.
    Af,
    /// Decode-and-forward.
    Df,
}

impl RelayMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RelayMode::Af => "af",
            RelayMode::Df => "df",
        }
    }
}

impl fmt::Display for RelayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelayMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "af" => Ok(RelayMode::Af),
            "df" => Ok(RelayMode::Df),
            other => Err(Error::InvalidConfig(format!(
                "unknown relay mode `{other}`"
            ))),
        }
    }
}

/// Gains seen by one subcarrier pair: source-relay gain on the source side,
/// winner and eavesdropper gains on the paired relay-user subcarrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGains {
    pub sr: f64,
    pub rm: f64,
    pub re: f64,
}

impl PairGains {
    pub const fn new(sr: f64, rm: f64, re: f64) -> Self {
        PairGains { sr, rm, re }
    }

    pub fn is_secure(&self) -> bool {
        self.rm > self.re
    }

    fn check(&self) -> Result<()> {
        if !(self.sr.is_finite() && self.rm.is_finite() && self.re.is_finite()) {
            return Err(Error::NonFinite("channel gain"));
        }
        if self.sr <= 0.0 || self.rm <= 0.0 || self.re < 0.0 {
            return Err(Error::InvalidConfig(
                "channel gains must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// AF secure rate in nats (already halved). Zero when either power is zero
/// or the eavesdropper is at least as strong as the user.
pub(crate) fn af_rate_nats(ps: f64, pr: f64, g: PairGains, noise: f64) -> f64 {
    if ps <= 0.0 || pr <= 0.0 || g.rm <= g.re {
        return 0.0;
    }
    let s = ps * g.sr / noise;
    let rm = pr * g.rm / noise;
    let re = pr * g.re / noise;
    let v = 0.5 * ((rm.ln_1p() - re.ln_1p()) + ((s + re).ln_1p() - (s + rm).ln_1p()));
    v.max(0.0)
}

/// DF secure rate in nats (already halved), `min` over hops minus leakage.
pub(crate) fn df_rate_nats(ps: f64, pr: f64, g: PairGains, noise: f64) -> f64 {
    let first = (ps * g.sr / noise).ln_1p();
    let second = (pr * g.rm / noise).ln_1p();
    let leak = (pr * g.re / noise).ln_1p();
    (0.5 * (first.min(second) - leak)).max(0.0)
}

pub(crate) fn rate_nats(mode: RelayMode, ps: f64, pr: f64, g: PairGains, noise: f64) -> f64 {
    match mode {
        RelayMode::Af => af_rate_nats(ps, pr, g, noise),
        RelayMode::Df => df_rate_nats(ps, pr, g, noise),
    }
}

fn check_inputs(ps: f64, pr: f64, g: PairGains, noise: f64) -> Result<()> {
    if !(ps.is_finite() && pr.is_finite()) {
        return Err(Error::NonFinite("power"));
    }
    if !noise.is_finite() {
        return Err(Error::NonFinite("noise variance"));
    }
    if ps < 0.0 || pr < 0.0 {
        return Err(Error::InvalidBudget("powers must be non-negative".into()));
    }
    if noise <= 0.0 {
        return Err(Error::InvalidConfig(
            "noise variance must be positive".into(),
        ));
    }
    g.check()
}

/// Secure rate of one AF subcarrier pair, in bits per OFDM symbol.
pub fn secure_rate_af(ps: f64, pr: f64, gains: PairGains, noise: f64) -> Result<f64> {
    check_inputs(ps, pr, gains, noise)?;
    Ok(af_rate_nats(ps, pr, gains, noise) / LN_2)
}

/// Secure rate of one DF subcarrier pair, in bits per OFDM symbol.
pub fn secure_rate_df(ps: f64, pr: f64, gains: PairGains, noise: f64) -> Result<f64> {
    check_inputs(ps, pr, gains, noise)?;
    Ok(df_rate_nats(ps, pr, gains, noise) / LN_2)
}

pub fn secure_rate(mode: RelayMode, ps: f64, pr: f64, gains: PairGains, noise: f64) -> Result<f64> {
    match mode {
        RelayMode::Af => secure_rate_af(ps, pr, gains, noise),
        RelayMode::Df => secure_rate_df(ps, pr, gains, noise),
    }
}

/// Per-pair and total secure rates.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Secure rate of pair `(n, perm[n])`, indexed by source-relay subcarrier `n`.
    pub per_pair: Vec<f64>,
    pub sum: f64,
    pub mode: RelayMode,
}

/// Sum secure rate (bits per OFDM symbol) of an allocation. Pair `n` uses the
/// source-relay gain of subcarrier `n` and the relay-user gains of
/// `pairing[n]`; `powers.ps[n]`/`powers.pr[n]` are the powers of that pair.
pub fn sum_secure_rate(
    realization: &ChannelRealization,
    assignment: &Assignment,
    pairing: &Pairing,
    powers: &PowerAllocation,
    mode: RelayMode,
) -> Result<RateReport> {
    let n = realization.num_subcarriers();
    pairing.check_len(n)?;
    if assignment.len() != n {
        return Err(Error::Dimension(format!(
            "assignment covers {} subcarriers, realization has {n}",
            assignment.len()
        )));
    }
    if powers.ps.len() != n || powers.pr.len() != n {
        return Err(Error::Dimension(format!(
            "power vectors have lengths {}/{}, expected {n}",
            powers.ps.len(),
            powers.pr.len()
        )));
    }
    let noise = realization.noise_variance();
    let gains = pairing.pair_gains(realization, assignment);
    let per_pair = gains
        .iter()
        .zip(powers.ps.iter().zip(&powers.pr))
        .map(|(&g, (&ps, &pr))| secure_rate(mode, ps, pr, g, noise))
        .collect::<Result<Vec<_>>>()?;
    let sum = per_pair.iter().sum();
    Ok(RateReport {
        per_pair,
        sum,
        mode,
    })
}

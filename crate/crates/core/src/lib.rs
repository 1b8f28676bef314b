//! Subcarrier allocation, pairing and power control for secure OFDMA over a
//! single amplify-and-forward or decode-and-forward relay, where every user is
//! a potential eavesdropper on the others.
//!
//! Typical flow: [`generate_realization`] → [`allocate`] → a pairing from
//! [`pairing`] → [`solve_af`] or [`solve_df`] → [`sum_secure_rate`].

pub mod allocation;
pub mod channel;
pub mod error;
pub mod oracle;
pub mod pairing;
pub mod power;
pub mod rates;
mod roots;

pub use allocation::{allocate, Assignment};
pub use channel::{
    generate_realization, load_realization, save_realization, ChannelRealization, Fading, Point,
    SystemConfig,
};
pub use error::{Error, Result};
pub use oracle::{brute_force_scp, solve_power_bruteforce, OracleResult};
pub use pairing::{
    effective_gains, gain_variance, opt_scp, pair_af, pair_default, pair_df, pair_ordered,
    EffectiveGains, PairedSolution, Pairing,
};
pub use power::af::{optimal_relay_power, solve_af};
pub use power::df::{secure_waterfill, solve_df, DfCase};
pub use power::{Budgets, PowerAllocation};
pub use rates::{
    secure_rate, secure_rate_af, secure_rate_df, sum_secure_rate, PairGains, RateReport, RelayMode,
};

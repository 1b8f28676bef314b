//! Two-hop channel model.
//!
//! A source talks to `M` untrusted users through a single relay; there is no
//! direct source-user link. Every link gain is distance-based path loss times
//! a unit-mean exponential variate (Rayleigh amplitude, squared), drawn
//! independently per subcarrier and per user.
//!
//! Realizations serialize to a small line-oriented text document:
//!
//! ```text
//! relaysec-realization v1
//! subcarriers 3
//! users 2
//! noise_variance 1
//! sr 0.51 1.7 0.23
//! ru 0 2.3 0.12 0.9
//! ru 1 0.4 3.1 0.02
//! end
//! ```
//!
//! `sr` holds the source-relay gains, one `ru <m>` row per user holds the
//! relay-user gains. All values are linear power.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};

const HEADER: &str = "relaysec-realization v1";

/// Position in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Small-scale fading applied on top of path loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fading {
    /// Unit-mean exponential power gain.
    #[default]
    Rayleigh,
    /// No fading; gains are pure path loss.
    None,
}

/// Geometry, noise and RNG settings for generating realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub num_subcarriers: usize,
    pub num_users: usize,
    /// Linear noise power.
    pub noise_variance: f64,
    pub path_loss_exponent: f64,
    pub source_pos: Point,
    pub relay_pos: Point,
    pub user_region_center: Point,
    pub user_region_side: f64,
    pub rng_seed: u64,
    /// When set, user positions are drawn from this seed instead of the
    /// realization seed, so placement stays fixed across realizations.
    pub placement_seed: Option<u64>,
    pub fading: Fading,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            num_subcarriers: 64,
            num_users: 8,
            noise_variance: 1.0,
            path_loss_exponent: 3.0,
            source_pos: Point::new(0.0, 0.0),
            relay_pos: Point::new(1.0, 0.0),
            user_region_center: Point::new(2.0, 0.0),
            user_region_side: 1.0,
            rng_seed: 0,
            placement_seed: None,
            fading: Fading::Rayleigh,
        }
    }
}

impl SystemConfig {
    /// Default geometry with a small number of subcarriers and users, sized
    /// for exhaustive cross-checks.
    pub fn desk(num_subcarriers: usize, num_users: usize) -> Self {
        SystemConfig {
            num_subcarriers,
            num_users,
            ..SystemConfig::default()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SystemConfig {
            rng_seed: seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_subcarriers == 0 {
            return Err(Error::InvalidConfig(
                "num_subcarriers must be positive".into(),
            ));
        }
        if self.num_users < 2 {
            return Err(Error::InvalidConfig(format!(
                "num_users must be at least 2, got {}",
                self.num_users
            )));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance > 0.0) {
            return Err(Error::InvalidConfig(
                "noise_variance must be positive".into(),
            ));
        }
        if !(self.path_loss_exponent.is_finite() && self.path_loss_exponent >= 2.0) {
            return Err(Error::InvalidConfig(
                "path_loss_exponent must be >= 2".into(),
            ));
        }
        if !(self.user_region_side.is_finite() && self.user_region_side >= 0.0) {
            return Err(Error::InvalidConfig(
                "user_region_side must be non-negative".into(),
            ));
        }
        let coords = [self.source_pos, self.relay_pos, self.user_region_center];
        if coords.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::InvalidConfig("positions must be finite".into()));
        }
        if self.source_pos.distance(&self.relay_pos) == 0.0 {
            return Err(Error::InvalidConfig(
                "relay must be distinct from source".into(),
            ));
        }
        let half = 0.5 * self.user_region_side;
        let dx = (self.relay_pos.x - self.user_region_center.x).abs();
        let dy = (self.relay_pos.y - self.user_region_center.y).abs();
        if dx <= half && dy <= half {
            return Err(Error::InvalidConfig(
                "relay lies inside the user region".into(),
            ));
        }
        Ok(())
    }
}

/// One channel draw: source-relay gains per subcarrier and relay-user gains
/// per user and subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    gain_sr: Vec<f64>,
    gain_ru: Vec<Vec<f64>>,
    noise_variance: f64,
}

impl ChannelRealization {
    pub fn new(gain_sr: Vec<f64>, gain_ru: Vec<Vec<f64>>, noise_variance: f64) -> Result<Self> {
        let n = gain_sr.len();
        if n == 0 {
            return Err(Error::Dimension("at least one subcarrier required".into()));
        }
        if gain_ru.len() < 2 {
            return Err(Error::Dimension(format!(
                "at least two users required, got {}",
                gain_ru.len()
            )));
        }
        if let Some((m, row)) = gain_ru.iter().enumerate().find(|(_, row)| row.len() != n) {
            return Err(Error::Dimension(format!(
                "user {m} has {} relay gains, expected {n}",
                row.len()
            )));
        }
        let all = gain_sr.iter().chain(gain_ru.iter().flatten());
        if all.clone().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("channel gain"));
        }
        if all.clone().any(|&g| g <= 0.0) {
            return Err(Error::InvalidConfig(
                "channel gains must be strictly positive".into(),
            ));
        }
        if !(noise_variance.is_finite() && noise_variance > 0.0) {
            return Err(Error::InvalidConfig(
                "noise_variance must be positive".into(),
            ));
        }
        Ok(ChannelRealization {
            gain_sr,
            gain_ru,
            noise_variance,
        })
    }

    pub fn num_subcarriers(&self) -> usize {
        self.gain_sr.len()
    }

    pub fn num_users(&self) -> usize {
        self.gain_ru.len()
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Source-relay gains, indexed by subcarrier.
    pub fn gain_sr(&self) -> &[f64] {
        &self.gain_sr
    }

    /// Relay-user gains, `[user][subcarrier]`.
    pub fn gain_ru(&self) -> &[Vec<f64>] {
        &self.gain_ru
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        out.push_str(&format!("subcarriers {}\n", self.num_subcarriers()));
        out.push_str(&format!("users {}\n", self.num_users()));
        out.push_str(&format!("noise_variance {}\n", self.noise_variance));
        out.push_str("sr");
        for g in &self.gain_sr {
            out.push_str(&format!(" {g}"));
        }
        out.push('\n');
        for (m, row) in self.gain_ru.iter().enumerate() {
            out.push_str(&format!("ru {m}"));
            for g in row {
                out.push_str(&format!(" {g}"));
            }
            out.push('\n');
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unexpected end of document, expected {what}"),
            })
        };

        let (line, header) = next("header")?;
        if header != HEADER {
            return Err(Error::Parse {
                line,
                msg: format!("expected header `{HEADER}`"),
            });
        }
        let n: usize = parse_keyed(next("subcarriers")?, "subcarriers")?;
        let m: usize = parse_keyed(next("users")?, "users")?;
        let noise: f64 = parse_keyed(next("noise_variance")?, "noise_variance")?;
        if n == 0 {
            return Err(Error::Dimension(
                "document declares zero subcarriers".into(),
            ));
        }
        if m < 2 {
            return Err(Error::Dimension(format!("document declares {m} users")));
        }

        let (line, sr_line) = next("sr row")?;
        let gain_sr = parse_row(line, sr_line, "sr", n)?;

        let mut gain_ru = Vec::with_capacity(m);
        for user in 0..m {
            let (line, row) = next("ru row")?;
            let tag = format!("ru {user}");
            gain_ru.push(parse_row(line, row, &tag, n)?);
        }
        let (line, end) = next("end")?;
        if end != "end" {
            return Err(Error::Parse {
                line,
                msg: "expected `end`".into(),
            });
        }
        ChannelRealization::new(gain_sr, gain_ru, noise)
    }
}

fn parse_keyed<T: std::str::FromStr>((line, text): (usize, &str), key: &str) -> Result<T> {
    let value = text
        .strip_prefix(key)
        .filter(|rest| rest.starts_with(char::is_whitespace))
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected `{key} <value>`"),
        })?;
    value.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad value for `{key}`"),
    })
}

fn parse_row(line: usize, text: &str, tag: &str, n: usize) -> Result<Vec<f64>> {
    let rest = text
        .strip_prefix(tag)
        .filter(|rest| rest.is_empty() || rest.starts_with(char::is_whitespace))
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected row `{tag}`"),
        })?;
    let values = rest
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("bad number `{tok}`"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != n {
        return Err(Error::Dimension(format!(
            "row `{tag}` has {} values, expected {n}",
            values.len()
        )));
    }
    Ok(values)
}

pub fn save_realization(realization: &ChannelRealization) -> Vec<u8> {
    realization.to_text().into_bytes()
}

pub fn load_realization(bytes: &[u8]) -> Result<ChannelRealization> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("not UTF-8: {e}"),
    })?;
    ChannelRealization::from_text(text)
}

fn draw_fading<R: Rng>(fading: Fading, rng: &mut R) -> f64 {
    match fading {
        // Exp1 can in principle return 0.0; keep gains strictly positive.
        Fading::Rayleigh => rng.sample::<f64, _>(Exp1).max(f64::MIN_POSITIVE),
        Fading::None => 1.0,
    }
}

fn draw_positions<R: Rng>(config: &SystemConfig, rng: &mut R) -> Vec<Point> {
    let half = 0.5 * config.user_region_side;
    let c = config.user_region_center;
    (0..config.num_users)
        .map(|_| {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            Point::new(c.x - half + u * 2.0 * half, c.y - half + v * 2.0 * half)
        })
        .collect()
}

/// Draws user positions and fading for one realization. Pure in `config`.
pub fn generate_realization(config: &SystemConfig) -> Result<ChannelRealization> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let users = match config.placement_seed {
        Some(seed) => draw_positions(config, &mut ChaCha8Rng::seed_from_u64(seed)),
        None => draw_positions(config, &mut rng),
    };
    let alpha = config.path_loss_exponent;
    let n = config.num_subcarriers;

    let sr_loss = config.source_pos.distance(&config.relay_pos).powf(-alpha);
    let gain_sr = (0..n)
        .map(|_| sr_loss * draw_fading(config.fading, &mut rng))
        .collect();

    let gain_ru = users
        .iter()
        .map(|pos| {
            let loss = config.relay_pos.distance(pos).powf(-alpha);
            (0..n)
                .map(|_| loss * draw_fading(config.fading, &mut rng))
                .collect()
        })
        .collect();

    ChannelRealization::new(gain_sr, gain_ru, config.noise_variance)
}

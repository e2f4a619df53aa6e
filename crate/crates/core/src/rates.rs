//! Expected delivery rates per (user, serving subset).
//!
//! Link quality is summarized by the mean received SNR `c_km`; the
//! small-scale power gain is i.i.d. Exp(1) per slot. For a set `T` of
//! transmitting BSs the per-slot rate is `B log2(1 + Σ_{m∈T} c_km g_m)` under
//! cooperative beamforming, and the best single link under non-cooperative
//! transmission. Expectations are taken by Monte Carlo with common random
//! numbers across subsets, so the table is exactly monotone in `T`.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::model::NetworkInstance;
use crate::textio::{fmt_f64, parse_err, parse_token, read_header, Reader};
use crate::{Error, Result};

/// Distances below this are clamped before applying the path-loss law.
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

/// Largest serving set for which all subsets are tabulated.
pub const MAX_SERVING_SET: usize = 8;

pub const FRT_VERSION: u32 = 1;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Delivery scheme assumed when a file is cached at several serving BSs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// One BS transmits; the user picks its best caching BS.
    NonCooperative,
    /// Every caching serving BS transmits jointly; SNRs add.
    CooperativeBeamforming,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::CooperativeBeamforming, Scheme::NonCooperative];

    /// Short name used in strategy labels and files.
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::NonCooperative => "noncotc",
            Scheme::CooperativeBeamforming => "cotc",
        }
    }

    pub fn from_name(name: &str) -> Option<Scheme> {
        match name {
            "noncotc" | "non-cooperative" => Some(Scheme::NonCooperative),
            "cotc" | "beamforming" => Some(Scheme::CooperativeBeamforming),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub bandwidth_hz: f64,
    pub slot_seconds: f64,
    pub pathloss_exponent: f64,
    /// Mean received SNR at the cell edge, linear scale.
    pub edge_snr_linear: f64,
    pub mc_samples: usize,
    pub mc_seed: u64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            bandwidth_hz: 5e6,
            slot_seconds: 0.02,
            pathloss_exponent: 3.5,
            edge_snr_linear: 1.0,
            mc_samples: 10_000,
            mc_seed: 0x5eed,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.bandwidth_hz > 0.0) {
            return bad("bandwidth must be positive");
        }
        if !(self.slot_seconds > 0.0) {
            return bad("slot length must be positive");
        }
        if !(self.pathloss_exponent > 2.0) {
            return bad("path-loss exponent must exceed 2");
        }
        if !(self.edge_snr_linear > 0.0) {
            return bad("edge SNR must be positive");
        }
        if self.mc_samples == 0 {
            return bad("Monte-Carlo sample count must be at least 1");
        }
        Ok(())
    }
}

/// Mean SNR at `distance`, normalized so that the cell edge sees
/// `edge_snr_linear`: `c(d) = edge_snr · (d / radius)^(-exponent)`.
pub fn link_gain(distance: f64, cell_radius: f64, params: &ChannelParams) -> f64 {
    let d = distance.max(MIN_LINK_DISTANCE_M);
    params.edge_snr_linear * (d / cell_radius).powf(-params.pathloss_exponent)
}

/// `e^x · E1(x)` for `x > 0`, relative error well below 1e-10.
pub fn exp_e1(x: f64) -> f64 {
    assert!(x > 0.0, "exp_e1 needs a positive argument");
    if x <= 1.0 {
        // Power series of E1.
        let mut sum = -EULER_GAMMA - x.ln();
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let delta = -term / k as f64;
            sum += delta;
            if delta.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        sum * x.exp()
    } else {
        // Continued fraction, modified Lentz; already scaled by e^x.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h
    }
}

/// Single-link expected rate in bits/s: `B e^(1/c) E1(1/c) / ln 2`.
pub fn expected_rate_closed(gain: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * exp_e1(1.0 / gain) / std::f64::consts::LN_2
}

/// Monte-Carlo estimate of `E{B log2(1 + Σ c_i g_i)}` with `g_i ~ Exp(1)`,
/// returned with its standard error.
pub fn expected_rate_mc_with_error(
    gains: &[f64],
    bandwidth_hz: f64,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    if gains.is_empty() || samples == 0 {
        return (0.0, 0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let snr: f64 = gains
            .iter()
            .map(|c| c * rng.sample::<f64, _>(Exp1))
            .sum();
        let r = bandwidth_hz * snr.ln_1p() / std::f64::consts::LN_2;
        sum += r;
        sum_sq += r * r;
    }
    let s = samples as f64;
    let mean = sum / s;
    let var = (sum_sq / s - mean * mean).max(0.0) * s / (s - 1.0).max(1.0);
    (mean, (var / s).sqrt())
}

pub fn expected_rate_mc(gains: &[f64], bandwidth_hz: f64, samples: usize, seed: u64) -> f64 {
    expected_rate_mc_with_error(gains, bandwidth_hz, samples, seed).0
}

/// Tabulated rates of one user over all subsets of its serving BSs.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRates {
    /// Serving BSs, ascending; bit `b` of a subset mask refers to `serving[b]`.
    pub serving: Vec<usize>,
    /// Mean SNR per serving BS.
    pub gains: Vec<f64>,
    /// Expected rate in bits/s indexed by subset mask; `rates[0] == 0`.
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedRateTable {
    pub scheme: Scheme,
    pub channel: ChannelParams,
    pub cell_radius: f64,
    users: Vec<UserRates>,
}

impl ExpectedRateTable {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn user(&self, k: usize) -> &UserRates {
        &self.users[k]
    }

    pub fn rate(&self, k: usize, mask: u32) -> f64 {
        self.users[k].rates[mask as usize]
    }

    pub fn serving(&self, k: usize) -> &[usize] {
        &self.users[k].serving
    }

    /// Mask bit of BS `m` for user `k`, if `m` serves `k`.
    pub fn bit_of(&self, k: usize, m: usize) -> Option<u32> {
        self.users[k]
            .serving
            .iter()
            .position(|&s| s == m)
            .map(|b| 1u32 << b)
    }

    pub fn full_mask(&self, k: usize) -> u32 {
        (1u32 << self.users[k].serving.len()) - 1
    }

    /// Mask of the given BSs; BSs not serving `k` are ignored.
    pub fn mask_of(&self, k: usize, bss: &[usize]) -> u32 {
        bss.iter().filter_map(|&m| self.bit_of(k, m)).fold(0, |a, b| a | b)
    }

    /// Rate of the wireless leg of an uncached delivery: the whole serving
    /// set under beamforming, the best single BS otherwise (both equal the
    /// full-mask entry).
    pub fn fetch_rate(&self, k: usize) -> f64 {
        self.rate(k, self.full_mask(k))
    }

    /// Checks that the table was built for this instance's serving sets.
    pub fn check_instance(&self, instance: &NetworkInstance) -> Result<()> {
        if self.users.len() != instance.num_users() {
            return Err(Error::TableMismatch(format!(
                "table has {} users, instance has {}",
                self.users.len(),
                instance.num_users()
            )));
        }
        if self.cell_radius != instance.cell_radius {
            return Err(Error::TableMismatch("cell radius differs".into()));
        }
        for (k, u) in self.users.iter().enumerate() {
            if u.serving != instance.serving(k) {
                return Err(Error::TableMismatch(format!("serving set of user {k} differs")));
            }
        }
        Ok(())
    }
}

fn user_rates(
    k: usize,
    serving: &[usize],
    gains: Vec<f64>,
    channel: &ChannelParams,
    scheme: Scheme,
) -> UserRates {
    let width = serving.len();
    let subsets = 1usize << width;
    let mut rng = ChaCha8Rng::seed_from_u64(channel.mc_seed);
    rng.set_stream(k as u64);

    let mut acc = vec![0.0f64; subsets];
    let mut snr = vec![0.0f64; subsets];
    let mut draws = vec![0.0f64; width];
    for _ in 0..channel.mc_samples {
        for (d, c) in draws.iter_mut().zip(&gains) {
            *d = c * rng.sample::<f64, _>(Exp1);
        }
        match scheme {
            Scheme::CooperativeBeamforming => {
                for mask in 1..subsets {
                    let low = mask.trailing_zeros() as usize;
                    snr[mask] = snr[mask & (mask - 1)] + draws[low];
                    acc[mask] += snr[mask].ln_1p();
                }
            }
            Scheme::NonCooperative => {
                for (b, d) in draws.iter().enumerate() {
                    acc[1 << b] += d.ln_1p();
                }
            }
        }
    }
    let scale = channel.bandwidth_hz / std::f64::consts::LN_2 / channel.mc_samples as f64;
    let mut rates: Vec<f64> = acc.iter().map(|a| a * scale).collect();
    rates[0] = 0.0;
    if scheme == Scheme::NonCooperative {
        for mask in 1..subsets {
            rates[mask] = (0..width)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| rates[1 << b])
                .fold(0.0, f64::max);
        }
    }
    UserRates {
        serving: serving.to_vec(),
        gains,
        rates,
    }
}

/// Tabulates the expected rate of every subset of every user's serving set.
///
/// Users are processed in parallel, each on its own random stream, so the
/// table does not depend on the thread count.
pub fn build_rate_table(
    instance: &NetworkInstance,
    channel: &ChannelParams,
    scheme: Scheme,
) -> Result<ExpectedRateTable> {
    channel.validate()?;
    if let Some(k) = (0..instance.num_users()).find(|&k| instance.serving(k).len() > MAX_SERVING_SET) {
        return Err(Error::Configuration(format!(
            "user {k} is covered by {} BSs (limit {MAX_SERVING_SET}); reduce cell overlap or BS density",
            instance.serving(k).len()
        )));
    }
    let users = (0..instance.num_users())
        .into_par_iter()
        .map(|k| {
            let serving = instance.serving(k);
            let gains = serving
                .iter()
                .map(|&m| link_gain(instance.distance(k, m), instance.cell_radius, channel))
                .collect();
            user_rates(k, serving, gains, channel, scheme)
        })
        .collect();
    Ok(ExpectedRateTable {
        scheme,
        channel: channel.clone(),
        cell_radius: instance.cell_radius,
        users,
    })
}

/// Serializes a table to the `.frt` text format.
pub fn write_rate_table(table: &ExpectedRateTable) -> String {
    let mut out = String::new();
    let w = &mut out;
    let ch = &table.channel;
    let _ = writeln!(w, "FRT {FRT_VERSION}");
    let _ = writeln!(w, "scheme {}", table.scheme.name());
    let _ = writeln!(w, "mc_samples {}", ch.mc_samples);
    let _ = writeln!(w, "mc_seed {}", ch.mc_seed);
    let _ = writeln!(w, "bandwidth_hz {}", fmt_f64(ch.bandwidth_hz));
    let _ = writeln!(w, "pathloss_exponent {}", fmt_f64(ch.pathloss_exponent));
    let _ = writeln!(w, "edge_snr_linear {}", fmt_f64(ch.edge_snr_linear));
    let _ = writeln!(w, "cell_radius {}", fmt_f64(table.cell_radius));
    let _ = writeln!(w, "users {}", table.users.len());
    for u in &table.users {
        let serving: Vec<String> = u.serving.iter().map(|m| m.to_string()).collect();
        let gains: Vec<String> = u.gains.iter().map(|&g| fmt_f64(g)).collect();
        let rates: Vec<String> = u.rates.iter().map(|&r| fmt_f64(r)).collect();
        let _ = writeln!(w, "serving {}", serving.join(" "));
        let _ = writeln!(w, "gains {}", gains.join(" "));
        let _ = writeln!(w, "rates {}", rates.join(" "));
    }
    let _ = writeln!(w, "end");
    out
}

/// Parses a `.frt` table and checks it was produced with `channel` and
/// `scheme`; any mismatch is an error.
pub fn read_rate_table(text: &str, channel: &ChannelParams, scheme: Scheme) -> Result<ExpectedRateTable> {
    let mut r = Reader::new(text, "rate table");
    read_header(&mut r, "FRT", FRT_VERSION)?;
    let (line, tokens) = r.expect_key("scheme")?;
    let found_scheme = match tokens.as_slice() {
        [s] => Scheme::from_name(s).ok_or_else(|| parse_err(line, format!("unknown scheme `{s}`")))?,
        _ => return Err(parse_err(line, "scheme takes one value".into())),
    };
    let stored = ChannelParams {
        mc_samples: r.value("mc_samples")?,
        mc_seed: r.value("mc_seed")?,
        bandwidth_hz: r.value("bandwidth_hz")?,
        pathloss_exponent: r.value("pathloss_exponent")?,
        edge_snr_linear: r.value("edge_snr_linear")?,
        slot_seconds: channel.slot_seconds,
    };
    if found_scheme != scheme {
        return Err(Error::TableMismatch(format!(
            "scheme {} requested, file has {}",
            scheme.name(),
            found_scheme.name()
        )));
    }
    if stored != *channel {
        return Err(Error::TableMismatch(format!(
            "stored channel {stored:?} differs from requested {channel:?}"
        )));
    }
    let cell_radius: f64 = r.value("cell_radius")?;
    let num_users: usize = r.value("users")?;
    let mut users = Vec::with_capacity(num_users);
    for _ in 0..num_users {
        let (l, toks) = r.expect_key("serving")?;
        let serving = toks
            .iter()
            .map(|t| parse_token(l, t))
            .collect::<Result<Vec<usize>>>()?;
        let (l, toks) = r.expect_key("gains")?;
        let gains = toks
            .iter()
            .map(|t| parse_token(l, t))
            .collect::<Result<Vec<f64>>>()?;
        let (l, toks) = r.expect_key("rates")?;
        let rates = toks
            .iter()
            .map(|t| parse_token(l, t))
            .collect::<Result<Vec<f64>>>()?;
        if gains.len() != serving.len() || rates.len() != 1 << serving.len() {
            return Err(parse_err(l, "serving/gains/rates lengths disagree".into()));
        }
        users.push(UserRates {
            serving,
            gains,
            rates,
        });
    }
    r.expect_key("end")?;
    Ok(ExpectedRateTable {
        scheme,
        channel: channel.clone(),
        cell_radius,
        users,
    })
}

pub fn save_rate_table(path: &Path, table: &ExpectedRateTable) -> Result<()> {
    std::fs::write(path, write_rate_table(table)).map_err(Error::from)
}

pub fn load_rate_table(path: &Path, channel: &ChannelParams, scheme: Scheme) -> Result<ExpectedRateTable> {
    read_rate_table(&std::fs::read_to_string(path)?, channel, scheme)
}

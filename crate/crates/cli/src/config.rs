//! Experiment configuration, read from a TOML file.
//!
//! Every key is optional; missing keys take the defaults below, which
//! reproduce the standard scenario (10 BSs on a line, 100 users, 1000 files,
//! Zipf 0.65).
//!
//! ```toml
//! out = "results"
//! strategies = ["greedy-cotc", "greedy-noncotc", "bp-cotc", "bp-noncotc", "gpc", "lpc"]
//! greedy_mode = "lazy"      # or "eager"
//! approx_prefs = false
//!
//! [instance]
//! num_bs = 10
//! num_users = 100
//! cell_radius = 150.0
//! bs_spacing = 200.0
//! layout = "line"           # or "grid"
//! seed = 1
//!
//! [demand]
//! num_files = 1000
//! gamma = 0.65              # or a ramp such as "0.2+4.8k/K"
//! file_bits = 1e8
//! backhaul_delay = 40.0
//! seed = 2
//!
//! [channel]
//! bandwidth_hz = 5e6
//! slot_seconds = 0.02
//! pathloss_exponent = 3.5
//! edge_snr_db = 0.0
//! mc_samples = 10000
//! mc_seed = 24301
//!
//! [bp]
//! max_rounds = 200
//! damping = 0.75
//! tolerance = 1e-6
//! stable_rounds = 3
//!
//! [sweep]
//! axis = "q"                # or "gamma"
//! values = [20, 40, 60]
//! q = 50                    # capacity used by gamma sweeps
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use fogcache_core::bp::BpOptions;
use fogcache_core::greedy::GreedyMode;
use fogcache_core::model::{GammaSpec, Layout, TopologyParams};
use fogcache_core::rates::{ChannelParams, Scheme};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Greedy(Scheme),
    Bp(Scheme),
    Gpc,
    Lpc,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Greedy(Scheme::CooperativeBeamforming),
        Strategy::Greedy(Scheme::NonCooperative),
        Strategy::Bp(Scheme::CooperativeBeamforming),
        Strategy::Bp(Scheme::NonCooperative),
        Strategy::Gpc,
        Strategy::Lpc,
    ];

    /// Delivery schemes the placement is evaluated under. Popularity
    /// baselines ignore delivery, so they are scored under both.
    pub fn schemes(&self) -> Vec<Scheme> {
        match self {
            Strategy::Greedy(s) | Strategy::Bp(s) => vec![*s],
            Strategy::Gpc | Strategy::Lpc => Scheme::ALL.to_vec(),
        }
    }

    /// Label of one result row.
    pub fn label(&self, scheme: Scheme) -> String {
        match self {
            Strategy::Greedy(_) | Strategy::Bp(_) => self.to_string(),
            _ => format!("{self}-{}", scheme.name()),
        }
    }

    pub fn uses_preferences(&self) -> bool {
        matches!(self, Strategy::Greedy(_) | Strategy::Bp(_))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Greedy(s) => write!(f, "greedy-{}", s.name()),
            Strategy::Bp(s) => write!(f, "bp-{}", s.name()),
            Strategy::Gpc => f.write_str("gpc"),
            Strategy::Lpc => f.write_str("lpc"),
        }
    }
}

impl FromStr for Strategy {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("unknown strategy '{s}'"));
        match s {
            "gpc" => return Ok(Strategy::Gpc),
            "lpc" => return Ok(Strategy::Lpc),
            _ => {}
        }
        let (algo, scheme) = s.split_once('-').ok_or_else(bad)?;
        let scheme = Scheme::from_name(scheme).ok_or_else(bad)?;
        match algo {
            "greedy" => Ok(Strategy::Greedy(scheme)),
            "bp" => Ok(Strategy::Bp(scheme)),
            _ => Err(bad()),
        }
    }
}

/// Parses a Zipf exponent: a number, or a ramp `a+b*k/K` (also written
/// `a+bk/K` or with `·`).
pub fn parse_gamma(text: &str) -> Result<GammaSpec, CliError> {
    let bad = || CliError::Config(format!("cannot parse gamma '{text}'"));
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(g) = t.parse::<f64>() {
        return Ok(GammaSpec::Constant(g));
    }
    let body = t.strip_suffix("k/K").ok_or_else(bad)?;
    let body = body.trim_end_matches(['*', '·']);
    let split = body.rfind('+').filter(|&i| i > 0).ok_or_else(bad)?;
    let base = body[..split].parse::<f64>().map_err(|_| bad())?;
    let slope = body[split + 1..].parse::<f64>().map_err(|_| bad())?;
    Ok(GammaSpec::Ramp { base, slope })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaValue {
    Number(f64),
    Text(String),
}

impl GammaValue {
    pub fn spec(&self) -> Result<GammaSpec, CliError> {
        match self {
            GammaValue::Number(g) => Ok(GammaSpec::Constant(*g)),
            GammaValue::Text(t) => parse_gamma(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceConfig {
    pub num_bs: usize,
    pub num_users: usize,
    pub cell_radius: f64,
    pub bs_spacing: f64,
    pub layout: String,
    pub seed: u64,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        let t = TopologyParams::default();
        InstanceConfig {
            num_bs: t.num_bs,
            num_users: t.num_users,
            cell_radius: t.cell_radius,
            bs_spacing: t.bs_spacing,
            layout: t.layout.name().to_string(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemandConfig {
    pub num_files: usize,
    pub gamma: GammaValue,
    pub file_bits: f64,
    pub backhaul_delay: f64,
    pub seed: u64,
}

impl Default for DemandConfig {
    fn default() -> Self {
        DemandConfig {
            num_files: 1000,
            gamma: GammaValue::Number(0.65),
            file_bits: 1e8,
            backhaul_delay: 40.0,
            seed: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub bandwidth_hz: f64,
    pub slot_seconds: f64,
    pub pathloss_exponent: f64,
    pub edge_snr_db: f64,
    pub mc_samples: usize,
    pub mc_seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        let c = ChannelParams::default();
        ChannelConfig {
            bandwidth_hz: c.bandwidth_hz,
            slot_seconds: c.slot_seconds,
            pathloss_exponent: c.pathloss_exponent,
            edge_snr_db: 10.0 * c.edge_snr_linear.log10(),
            mc_samples: c.mc_samples,
            mc_seed: c.mc_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpConfig {
    pub max_rounds: usize,
    pub damping: f64,
    pub tolerance: f64,
    pub stable_rounds: usize,
}

impl Default for BpConfig {
    fn default() -> Self {
        let o = BpOptions::default();
        BpConfig {
            max_rounds: o.max_rounds,
            damping: o.damping,
            tolerance: o.tolerance,
            stable_rounds: o.stable_rounds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Q,
    Gamma,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Q => "q",
            SweepAxis::Gamma => "gamma",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub q: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            axis: SweepAxis::Q,
            values: (1..=10).map(|i| 20.0 * i as f64).collect(),
            q: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out: PathBuf,
    pub strategies: Vec<String>,
    pub greedy_mode: String,
    pub approx_prefs: bool,
    pub instance: InstanceConfig,
    pub demand: DemandConfig,
    pub channel: ChannelConfig,
    pub bp: BpConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            out: PathBuf::from("results"),
            strategies: Strategy::ALL.iter().map(|s| s.to_string()).collect(),
            greedy_mode: "lazy".into(),
            approx_prefs: false,
            instance: InstanceConfig::default(),
            demand: DemandConfig::default(),
            channel: ChannelConfig::default(),
            bp: BpConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn strategy_list(&self) -> Result<Vec<Strategy>, CliError> {
        if self.strategies.is_empty() {
            return Err(CliError::Config("strategy list is empty".into()));
        }
        let mut out: Vec<Strategy> = Vec::new();
        for s in &self.strategies {
            let st: Strategy = s.parse()?;
            if out.contains(&st) {
                return Err(CliError::Config(format!("strategy '{s}' listed twice")));
            }
            out.push(st);
        }
        Ok(out)
    }

    pub fn greedy_mode(&self) -> Result<GreedyMode, CliError> {
        match self.greedy_mode.as_str() {
            "lazy" => Ok(GreedyMode::Lazy),
            "eager" => Ok(GreedyMode::Eager),
            other => Err(CliError::Config(format!("unknown greedy mode '{other}'"))),
        }
    }

    pub fn layout(&self) -> Result<Layout, CliError> {
        Layout::from_name(&self.instance.layout)
            .ok_or_else(|| CliError::Config(format!("unknown layout '{}'", self.instance.layout)))
    }

    pub fn topology(&self) -> Result<TopologyParams, CliError> {
        Ok(TopologyParams {
            num_bs: self.instance.num_bs,
            num_users: self.instance.num_users,
            cell_radius: self.instance.cell_radius,
            bs_spacing: self.instance.bs_spacing,
            layout: self.layout()?,
        })
    }

    pub fn channel_params(&self) -> ChannelParams {
        let c = &self.channel;
        ChannelParams {
            bandwidth_hz: c.bandwidth_hz,
            slot_seconds: c.slot_seconds,
            pathloss_exponent: c.pathloss_exponent,
            edge_snr_linear: 10f64.powf(c.edge_snr_db / 10.0),
            mc_samples: c.mc_samples,
            mc_seed: c.mc_seed,
        }
    }

    pub fn bp_options(&self) -> BpOptions {
        BpOptions {
            max_rounds: self.bp.max_rounds,
            damping: self.bp.damping,
            tolerance: self.bp.tolerance,
            stable_rounds: self.bp.stable_rounds,
            ..BpOptions::default()
        }
    }

    /// Sweep values as capacities (Q axis only).
    pub fn q_values(&self) -> Vec<usize> {
        self.sweep.values.iter().map(|&v| v as usize).collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        self.strategy_list()?;
        self.greedy_mode()?;
        self.layout()?;
        self.demand.gamma.spec()?;
        self.channel_params()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.bp_options()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.instance.num_bs == 0 || self.instance.num_users == 0 {
            return bad("need at least one BS and one user".into());
        }
        if self.demand.num_files == 0 {
            return bad("need at least one file".into());
        }
        if !(self.demand.file_bits > 0.0) || !(self.demand.backhaul_delay > 0.0) {
            return bad("file size and backhaul delay must be positive".into());
        }
        if self.sweep.values.is_empty() {
            return bad("sweep has no values".into());
        }
        for &v in &self.sweep.values {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("sweep value {v} is not positive"));
            }
            if self.sweep.axis == SweepAxis::Q {
                if v.fract() != 0.0 {
                    return bad(format!("capacity {v} is not an integer"));
                }
                if v as usize > self.demand.num_files {
                    return bad(format!(
                        "capacity {v} exceeds the number of files {}",
                        self.demand.num_files
                    ));
                }
            }
        }
        if self.sweep.axis == SweepAxis::Gamma
            && (self.sweep.q == 0 || self.sweep.q > self.demand.num_files)
        {
            return bad(format!("gamma sweep capacity {} out of range", self.sweep.q));
        }
        Ok(())
    }
}

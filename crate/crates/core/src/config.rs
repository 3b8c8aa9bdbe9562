//! TOML run configuration.
//!
//! A file holds one table of system keys followed by one or more `[[sweep]]`
//! sections. Each sweep names an axis and a list of values and may override
//! any system key for that sweep only:
//!
//! ```toml
//! antennas = 50
//! users = 10
//! oscillators = "co"
//! q0 = 0.9
//! sigma_deg_bs = 6.0
//! sigma_deg_ue = 6.0
//! tau = 10
//! snr_db = 10.0
//! precoders = ["rzf", "zf", "mf"]
//!
//! [[sweep]]
//! name = "snr-do"
//! axis = "snr"
//! values = [-10.0, 0.0, 10.0, 20.0, 30.0]
//! oscillators = "do"
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::EstimateQuality;
use crate::error::{Error, Result};
use crate::phase_noise::{OscillatorTopology, PhaseNoiseParams};
use crate::precoding::DEFAULT_CONDITION_CAP;
use crate::rates::RateDefinition;
use crate::scenario::Scenario;

/// How an SNR in dB maps to the noise variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnrConvention {
    /// `SNR = p_k / σ_w²` at the evaluated UE.
    #[default]
    PerUser,
    /// `SNR = Σp / σ_w²`.
    Total,
}

impl SnrConvention {
    pub fn label(&self) -> &'static str {
        match self {
            Self::PerUser => "per-user",
            Self::Total => "total",
        }
    }
}

/// Oscillator count, or `"co"` / `"do"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Oscillators {
    Count(usize),
    Named(String),
}

impl Default for Oscillators {
    fn default() -> Self {
        Self::Count(1)
    }
}

impl Oscillators {
    pub fn resolve(&self, antennas: usize) -> Result<usize> {
        match self {
            Self::Count(n) => Ok(*n),
            Self::Named(s) => match s.to_ascii_lowercase().as_str() {
                "co" => Ok(1),
                "do" => Ok(antennas),
                other => Err(Error::config("oscillators", format!("expected a count, \"co\" or \"do\", got \"{other}\""))),
            },
        }
    }
}

/// `"equal"` or one power per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Powers {
    Named(String),
    List(Vec<f64>),
}

impl Default for Powers {
    fn default() -> Self {
        Self::Named("equal".into())
    }
}

impl Powers {
    pub fn resolve(&self, users: usize) -> Result<Vec<f64>> {
        match self {
            Self::Named(s) if s == "equal" => Ok(vec![1.0 / users as f64; users]),
            Self::Named(s) => Err(Error::config("powers", format!("expected \"equal\" or a list, got \"{s}\""))),
            Self::List(v) => Ok(v.clone()),
        }
    }
}

/// Precoder requested in a config: `rzf` (optimal regularization), `rzf:<α>`,
/// `zf` or `mf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecoderSpec {
    RzfOptimal,
    RzfFixed(f64),
    Zf,
    Mf,
}

impl FromStr for PrecoderSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "rzf" => Ok(Self::RzfOptimal),
            "zf" => Ok(Self::Zf),
            "mf" => Ok(Self::Mf),
            other => {
                let alpha = other
                    .strip_prefix("rzf:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| Error::config("precoders", format!("unknown precoder \"{s}\"")))?;
                if alpha > 0.0 && alpha.is_finite() {
                    Ok(Self::RzfFixed(alpha))
                } else {
                    Err(Error::config("precoders", format!("regularization must be positive, got {alpha}")))
                }
            }
        }
    }
}

impl fmt::Display for PrecoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RzfOptimal => f.write_str("rzf"),
            Self::RzfFixed(a) => write!(f, "rzf:{a}"),
            Self::Zf => f.write_str("zf"),
            Self::Mf => f.write_str("mf"),
        }
    }
}

fn default_precoders() -> Vec<String> {
    vec!["rzf".into()]
}
fn default_realizations() -> usize {
    2000
}
fn default_true() -> bool {
    true
}
fn default_parallelism() -> usize {
    1
}
fn default_cap() -> f64 {
    DEFAULT_CONDITION_CAP
}

/// System parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub antennas: usize,
    pub users: usize,
    #[serde(default)]
    pub oscillators: Oscillators,
    pub q0: f64,
    #[serde(default)]
    pub sigma_deg_bs: f64,
    #[serde(default)]
    pub sigma_deg_ue: f64,
    pub tau: u64,
    /// Defaults to `tau + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_var: Option<f64>,
    #[serde(default)]
    pub snr_convention: SnrConvention,
    #[serde(default)]
    pub powers: Powers,
    #[serde(default = "default_precoders")]
    pub precoders: Vec<String>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    /// Run the Monte-Carlo estimator next to the closed forms.
    #[serde(default = "default_true")]
    pub empirical: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub ue: usize,
    #[serde(default = "default_cap")]
    pub condition_cap: f64,
    /// Also report the grid-search maximizer of the large-system RZF SINR.
    #[serde(default)]
    pub alpha_grid_search: bool,
    #[serde(default)]
    pub rate: RateDefinition,
}

/// A config with every derived quantity resolved and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub scenario: Scenario,
    pub precoders: Vec<PrecoderSpec>,
    pub sigma_deg_bs: f64,
    pub sigma_deg_ue: f64,
    pub snr_db: Option<f64>,
}

impl SystemConfig {
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        if self.antennas == 0 {
            return Err(Error::config("antennas", "must be at least 1"));
        }
        if self.users == 0 || self.users > self.antennas {
            return Err(Error::config(
                "users",
                format!("need 1 <= users <= antennas = {}, got {}", self.antennas, self.users),
            ));
        }
        let osc = self.oscillators.resolve(self.antennas)?;
        let topology = OscillatorTopology::new(self.antennas, osc)
            .map_err(|e| Error::config("oscillators", e.to_string()))?;
        let quality = EstimateQuality::new(self.q0).map_err(|e| Error::config("q0", e.to_string()))?;
        for (field, v) in [("sigma_deg_bs", self.sigma_deg_bs), ("sigma_deg_ue", self.sigma_deg_ue)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        let phase = PhaseNoiseParams::from_degrees(self.sigma_deg_bs, self.sigma_deg_ue, self.tau)
            .map_err(|e| Error::config("tau", e.to_string()))?;
        let coherence = self.coherence.unwrap_or(self.tau + 1);
        if self.tau >= coherence {
            return Err(Error::config(
                "coherence",
                format!("tau = {} must be smaller than the coherence length {coherence}", self.tau),
            ));
        }
        let powers = self.powers.resolve(self.users)?;
        if powers.len() != self.users {
            return Err(Error::config("powers", format!("{} entries for {} users", powers.len(), self.users)));
        }
        if self.ue >= self.users {
            return Err(Error::config("ue", format!("index {} out of range 0..{}", self.ue, self.users)));
        }
        let noise_var = match (self.snr_db, self.noise_var) {
            (Some(_), Some(_)) => return Err(Error::config("snr_db", "give either snr_db or noise_var, not both")),
            (None, None) => return Err(Error::config("snr_db", "one of snr_db or noise_var is required")),
            (None, Some(v)) => v,
            (Some(db), None) => {
                if !db.is_finite() {
                    return Err(Error::config("snr_db", format!("must be finite, got {db}")));
                }
                let reference = match self.snr_convention {
                    SnrConvention::PerUser => powers[self.ue],
                    SnrConvention::Total => powers.iter().sum(),
                };
                reference / 10f64.powf(db / 10.0)
            }
        };
        if self.precoders.is_empty() {
            return Err(Error::config("precoders", "at least one precoder is required"));
        }
        let precoders = self
            .precoders
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<PrecoderSpec>>>()?;
        if self.empirical && self.realizations == 0 {
            return Err(Error::config("realizations", "must be at least 1"));
        }
        if self.parallelism == 0 {
            return Err(Error::config("parallelism", "must be at least 1"));
        }
        let scenario = Scenario {
            topology,
            users: self.users,
            quality,
            phase,
            coherence,
            noise_var,
            powers,
            ue: self.ue,
            condition_cap: self.condition_cap,
        }
        .validated()?;
        Ok(ResolvedConfig {
            scenario,
            precoders,
            sigma_deg_bs: self.sigma_deg_bs,
            sigma_deg_ue: self.sigma_deg_ue,
            snr_db: self.snr_db,
        })
    }
}

/// Parameter varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// SNR in dB.
    Snr,
    /// Number of BS oscillators.
    MOsc,
    /// `M/K` at fixed `K`; sets `M = β K`.
    Beta,
    /// Phase-noise standard deviation in degrees, applied at both BS and UE.
    SigmaPhi,
    /// Fixed RZF regularization replacing every `rzf` entry.
    Alpha,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Snr => "snr",
            Self::MOsc => "m-osc",
            Self::Beta => "beta",
            Self::SigmaPhi => "sigma-phi",
            Self::Alpha => "alpha",
        }
    }

    /// Applies one axis value to a copy of `base`.
    pub fn apply(&self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut c = base.clone();
        let integer = |field: &str| -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 && value <= usize::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(Error::config(field, format!("sweep value {value} is not a positive integer")))
            }
        };
        match self {
            Self::Snr => {
                c.snr_db = Some(value);
                c.noise_var = None;
            }
            Self::MOsc => c.oscillators = Oscillators::Count(integer("oscillators")?),
            Self::Beta => {
                let m = value * c.users as f64;
                if !(value >= 1.0) || m.fract() != 0.0 {
                    return Err(Error::config("antennas", format!("beta = {value} with {} users is not an integer antenna count", c.users)));
                }
                c.antennas = m as usize;
            }
            Self::SigmaPhi => {
                c.sigma_deg_bs = value;
                c.sigma_deg_ue = value;
            }
            Self::Alpha => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(Error::config("alpha", format!("must be positive, got {value}")));
                }
                for p in &mut c.precoders {
                    if p.trim().to_ascii_lowercase().starts_with("rzf") {
                        *p = format!("rzf:{value}");
                    }
                }
            }
        }
        Ok(c)
    }
}

/// One sweep with its merged system parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub system: SystemConfig,
}

impl SweepSpec {
    /// Resolves every point, reporting the first invalid one.
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("values", format!("sweep \"{}\" has no values", self.name)));
        }
        for v in &self.values {
            self.axis.apply(&self.system, *v)?.resolve()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub system: SystemConfig,
    pub sweeps: Vec<SweepSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepHeader {
    name: String,
    axis: SweepAxis,
    values: Vec<f64>,
}

fn de_error(e: toml::de::Error) -> Error {
    let msg = e.message().to_string();
    let field = msg
        .split('`')
        .nth(1)
        .filter(|_| msg.contains("unknown field") || msg.contains("missing field"))
        .unwrap_or("config")
        .to_string();
    Error::config(field, msg)
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(de_error)?;
        let sweeps_raw = match table.remove("sweep") {
            None => Vec::new(),
            Some(toml::Value::Array(a)) => a,
            Some(_) => return Err(Error::config("sweep", "expected [[sweep]] sections")),
        };
        let system: SystemConfig = toml::Value::Table(table.clone()).try_into().map_err(de_error)?;
        let mut sweeps = Vec::with_capacity(sweeps_raw.len());
        for (i, raw) in sweeps_raw.into_iter().enumerate() {
            let toml::Value::Table(mut entry) = raw else {
                return Err(Error::config("sweep", format!("entry {i} is not a table")));
            };
            let mut header = toml::Table::new();
            for key in ["name", "axis", "values"] {
                if let Some(v) = entry.remove(key) {
                    header.insert(key.into(), v);
                }
            }
            let header: SweepHeader = toml::Value::Table(header).try_into().map_err(de_error)?;
            let mut merged = table.clone();
            merged.extend(entry);
            let sys: SystemConfig = toml::Value::Table(merged).try_into().map_err(de_error)?;
            sweeps.push(SweepSpec {
                name: header.name,
                axis: header.axis,
                values: header.values,
                system: sys,
            });
        }
        Ok(Self { system, sweeps })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Validates the base system table and every sweep point.
    pub fn validate(&self) -> Result<()> {
        if self.sweeps.is_empty() {
            self.system.resolve()?;
        }
        for s in &self.sweeps {
            s.validate()?;
        }
        Ok(())
    }
}

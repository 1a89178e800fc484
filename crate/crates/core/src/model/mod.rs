//! Domain types: compression profiles, device and server configuration,
//! channel scenarios and simulation settings.

mod config;
pub mod lut;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

pub use config::{load_config, load_config_file, parse_config, ConfigWarning};

/// Thermal noise floor, -174 dBm/Hz expressed in W/Hz.
pub const THERMAL_NOISE_PSD: f64 = 3.981_071_705_534_97e-21;
/// Effective switched capacitance used for every processor in the reference scenarios.
pub const KAPPA_REF: f64 = 1.097e-27;
pub const DEFAULT_P_TX_MAX: f64 = 0.1;
pub const DEFAULT_SLOT: f64 = 0.05;
pub const DEFAULT_HORIZON: u64 = 20_000;

/// One row of an accuracy/throughput look-up table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionProfile {
    /// Per-dimension compression factor.
    pub rho: u32,
    /// Classification accuracy as a fraction.
    pub accuracy: f64,
    /// Pixels per compressed data unit.
    pub pixels: u64,
    /// Average bits per pixel after entropy coding.
    pub bits_per_pixel: f64,
    /// DUs compressed and zipped per device clock cycle.
    pub j_offload: f64,
    /// DUs compressed and classified locally per device clock cycle.
    pub j_local: f64,
    /// DUs classified per server clock cycle.
    pub j_server: f64,
}

impl CompressionProfile {
    /// Bits needed to ship one compressed data unit.
    pub fn du_bits(&self) -> f64 {
        self.pixels as f64 * self.bits_per_pixel
    }

    pub(crate) fn validate(&self, at: &str) -> Result<(), ConfigError> {
        if !(self.accuracy > 0.0 && self.accuracy <= 1.0) {
            return Err(ConfigError::field(
                format!("{at}.accuracy"),
                format!("{} not in (0, 1]", self.accuracy),
            ));
        }
        for (name, v) in [
            ("j_offload", self.j_offload),
            ("j_local", self.j_local),
            ("j_server", self.j_server),
            ("bits_per_pixel", self.bits_per_pixel),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::field(
                    format!("{at}.{name}"),
                    "must be positive",
                ));
            }
        }
        if self.pixels == 0 {
            return Err(ConfigError::field(
                format!("{at}.pixels"),
                "must be positive",
            ));
        }
        if self.rho == 0 {
            return Err(ConfigError::field(format!("{at}.rho"), "must be positive"));
        }
        Ok(())
    }
}

/// Bits needed to ship one compressed data unit, `pixels * bits_per_pixel`.
pub fn du_bits(profile: &CompressionProfile) -> f64 {
    profile.du_bits()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingMode {
    /// Independent Rayleigh block fading per slot.
    IidRayleigh,
    /// Time-correlated fading with Clarke's autocorrelation. `None` picks
    /// the Doppler whose coherence time equals one slot.
    Clarke { doppler_hz: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScenario {
    pub distance_m: f64,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    /// Mean power gain including path loss.
    pub pathloss_gain: f64,
    /// Receiver noise power spectral density, W/Hz.
    pub noise_psd: f64,
    pub fading: FadingMode,
}

impl ChannelScenario {
    /// Short-range scenario "A": 50 m, 2.5 MHz at 6 GHz.
    pub fn preset_a() -> Self {
        ChannelScenario {
            distance_m: 50.0,
            bandwidth_hz: 2.5e6,
            carrier_hz: 6e9,
            pathloss_gain: 1.06e-10,
            noise_psd: THERMAL_NOISE_PSD,
            fading: FadingMode::IidRayleigh,
        }
    }

    /// Long-range scenario "B": 500 m, 2.5 MHz at 9 GHz.
    pub fn preset_b() -> Self {
        ChannelScenario {
            distance_m: 500.0,
            bandwidth_hz: 2.5e6,
            carrier_hz: 9e9,
            pathloss_gain: 2.72e-14,
            noise_psd: THERMAL_NOISE_PSD,
            fading: FadingMode::IidRayleigh,
        }
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        match name {
            "A" | "a" => Ok(Self::preset_a()),
            "B" | "b" => Ok(Self::preset_b()),
            other => Err(ConfigError::UnknownPreset {
                kind: "channel",
                name: other.to_string(),
                known: "A, B".into(),
            }),
        }
    }

    /// Noise power over the whole band, `N0 * B`.
    pub fn noise_power(&self) -> f64 {
        self.noise_psd * self.bandwidth_hz
    }
}

/// Long-term targets for one device. Which ones are active depends on the policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeConstraints {
    /// Average end-to-end delay bound, seconds.
    pub delay_avg: f64,
    /// Minimum average accuracy (fraction); energy-minimizing policies only.
    pub accuracy_avg: f64,
    /// Maximum average device energy per slot, J; accuracy-maximizing policy only.
    pub energy_avg: f64,
}

/// Virtual-queue step sizes for one device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSizes {
    /// Delay queue.
    pub mu: f64,
    /// Accuracy queue.
    pub nu: f64,
    /// Device energy queue.
    pub lambda: f64,
}

impl Default for StepSizes {
    fn default() -> Self {
        StepSizes {
            mu: 1.0,
            nu: 1.0,
            lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeConfig {
    pub id: usize,
    pub lut: Vec<CompressionProfile>,
    /// Admissible clock frequencies, Hz, ascending.
    pub freq_set: Vec<f64>,
    /// Effective switched capacitance.
    pub kappa: f64,
    pub p_tx_max: f64,
    pub channel: ChannelScenario,
    /// Energy weight of this device within the fleet.
    pub delta: f64,
    /// Mean arrivals, DUs per slot.
    pub arrival_mean: f64,
    pub constraints: UeConstraints,
    pub step_sizes: StepSizes,
}

impl UeConfig {
    pub fn bandwidth(&self) -> f64 {
        self.channel.bandwidth_hz
    }

    /// Number of compression profiles (and server queues) for this device.
    pub fn lut_len(&self) -> usize {
        self.lut.len()
    }

    /// Queue-length target implied by the delay bound through Little's law.
    pub fn queue_avg(&self, tau: f64) -> f64 {
        self.constraints.delay_avg * self.arrival_mean / tau
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsConfig {
    /// Admissible server frequencies, Hz, ascending.
    pub freq_set: Vec<f64>,
    pub kappa: f64,
    /// Device-versus-server energy weight in [0, 1].
    pub gamma: f64,
    /// Step size of the server energy queue.
    pub eta: f64,
    /// Server average energy budget per slot, J (accuracy-maximizing policy only).
    pub energy_avg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Minimum energy under delay and accuracy constraints.
    MuMeda,
    /// Maximum accuracy under delay and energy constraints.
    MuMade,
    /// Energy minimization with a single encoder/classifier pair.
    FixedAccuracy { rho: u32 },
    /// Rate fixed from average channel statistics, dynamic compression and clock.
    HybridFixedRate,
}

impl PolicyKind {
    pub fn name(&self) -> String {
        match self {
            PolicyKind::MuMeda => "mu_meda".into(),
            PolicyKind::MuMade => "mu_made".into(),
            PolicyKind::FixedAccuracy { rho } => format!("fixed_accuracy_rho{rho}"),
            PolicyKind::HybridFixedRate => "hybrid_fixed_rate".into(),
        }
    }

    /// True for the accuracy-maximizing family (energy virtual queues).
    pub fn maximizes_accuracy(&self) -> bool {
        matches!(self, PolicyKind::MuMade)
    }

    /// Parses the command-line spelling: `mu_meda`, `mu_made`,
    /// `hybrid_fixed_rate`, `fixed_accuracy:<rho>`.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mu_meda" | "meda" => Some(PolicyKind::MuMeda),
            "mu_made" | "made" => Some(PolicyKind::MuMade),
            "hybrid_fixed_rate" | "hybrid" => Some(PolicyKind::HybridFixedRate),
            other => other
                .strip_prefix("fixed_accuracy:")
                .and_then(|r| r.parse().ok())
                .map(|rho| PolicyKind::FixedAccuracy { rho }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalModel {
    Poisson,
    /// Alternates floor/ceil of the mean so the long-run mean is exact.
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Slot length, seconds.
    pub slot_duration: f64,
    pub horizon: u64,
    /// Leading slots excluded from time averages.
    pub warmup: u64,
    pub v: f64,
    pub policy: PolicyKind,
    /// Disables local processing.
    pub force_offload: bool,
    pub rng_seed: u64,
    pub arrival_model: ArrivalModel,
}

/// A validated configuration: the device fleet, the server and the run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub fleet: Vec<UeConfig>,
    pub server: EsConfig,
    pub sim: SimConfig,
}

impl Config {
    pub fn tau(&self) -> f64 {
        self.sim.slot_duration
    }

    pub fn num_ues(&self) -> usize {
        self.fleet.len()
    }

    /// Serializes to the same document format [`load_config`] reads, with
    /// every preset expanded inline.
    pub fn to_toml(&self) -> String {
        config::to_document(self)
    }

    /// Copy with the given trade-off parameter.
    pub fn with_v(&self, v: f64) -> Self {
        let mut c = self.clone();
        c.sim.v = v;
        c
    }

    pub fn with_policy(&self, policy: PolicyKind) -> Self {
        let mut c = self.clone();
        c.sim.policy = policy;
        c
    }
}

/// `levels` evenly spaced frequencies `{1/levels, 2/levels, ..., 1} * max_hz`.
pub fn uniform_freq_set(max_hz: f64, levels: usize) -> Vec<f64> {
    (1..=levels)
        .map(|i| max_hz * i as f64 / levels as f64)
        .collect()
}

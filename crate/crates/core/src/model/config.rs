//! TOML configuration documents.
//!
//! A document has one `[sim]` table, one `[server]` table and one or more
//! `[[ue]]` tables. Look-up tables, channels and frequency sets accept either
//! a preset/shorthand or the fully expanded form; [`to_document`] always
//! writes the expanded form so a written document reloads to the same
//! [`Config`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    lut, uniform_freq_set, ArrivalModel, ChannelScenario, CompressionProfile, Config, EsConfig,
    FadingMode, PolicyKind, SimConfig, StepSizes, UeConfig, UeConstraints, DEFAULT_HORIZON,
    DEFAULT_P_TX_MAX, DEFAULT_SLOT, KAPPA_REF,
};
use crate::error::ConfigError;

/// Non-fatal adjustments made while loading.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigWarning {
    /// Energy weights did not sum to one and were rescaled.
    DeltaNormalized { original_sum: f64 },
}

impl std::fmt::Display for ConfigWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigWarning::DeltaNormalized { original_sum } => write!(
                f,
                "device energy weights summed to {original_sum}; rescaled to sum to 1"
            ),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    sim: SimDoc,
    server: ServerDoc,
    ue: Vec<UeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slot_duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    warmup: Option<u64>,
    v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    policy: Option<PolicyKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    force_offload: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rng_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arrival_model: Option<ArrivalModel>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum FreqSpec {
    List(Vec<f64>),
    Levels { max_hz: f64, levels: usize },
}

impl FreqSpec {
    fn resolve(&self, at: &str) -> Result<Vec<f64>, ConfigError> {
        let mut set = match self {
            FreqSpec::List(v) => v.clone(),
            FreqSpec::Levels { max_hz, levels } => uniform_freq_set(*max_hz, *levels),
        };
        if set.is_empty() {
            return Err(ConfigError::field(at, "frequency set is empty"));
        }
        if let Some(bad) = set.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
            return Err(ConfigError::field(
                at,
                format!("frequency {bad} is not positive"),
            ));
        }
        set.sort_by(f64::total_cmp);
        set.dedup();
        Ok(set)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ServerDoc {
    freq_set: FreqSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    energy_avg: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum LutSpec {
    Preset(String),
    Rows(Vec<CompressionProfile>),
    File { path: PathBuf },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distance_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bandwidth_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    carrier_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pathloss_gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_psd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fading: Option<FadingMode>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ChannelSpec {
    Preset(String),
    Table(ChannelDoc),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UeDoc {
    /// Number of identical devices described by this block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    lut: LutSpec,
    freq_set: FreqSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_tx_max: Option<f64>,
    channel: ChannelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    arrival_mean: f64,
    delay_avg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    accuracy_avg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    energy_avg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
}

/// Parses and validates a document, logging any warnings.
pub fn load_config(text: &str) -> Result<Config, ConfigError> {
    let (config, warnings) = parse_config(text, None)?;
    for w in &warnings {
        tracing::warn!("{w}");
    }
    Ok(config)
}

/// Reads a document from disk; relative LUT paths resolve against its directory.
pub fn load_config_file(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (config, warnings) = parse_config(&text, path.parent())?;
    for w in &warnings {
        tracing::warn!("{}: {w}", path.display());
    }
    Ok(config)
}

/// Parses and validates a document, returning warnings instead of logging them.
pub fn parse_config(
    text: &str,
    base_dir: Option<&Path>,
) -> Result<(Config, Vec<ConfigWarning>), ConfigError> {
    let doc: Document = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    resolve(doc, base_dir)
}

fn positive(at: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::field(at, format!("{v} must be positive")))
    }
}

fn non_negative(at: &str, v: f64) -> Result<f64, ConfigError> {
    if v >= 0.0 && !v.is_nan() {
        Ok(v)
    } else {
        Err(ConfigError::field(at, format!("{v} must be non-negative")))
    }
}

fn resolve_channel(spec: &ChannelSpec, at: &str) -> Result<ChannelScenario, ConfigError> {
    let doc = match spec {
        ChannelSpec::Preset(name) => return ChannelScenario::preset(name),
        ChannelSpec::Table(doc) => doc,
    };
    let base = doc
        .preset
        .as_deref()
        .map(ChannelScenario::preset)
        .transpose()?;
    let pick = |name: &str, own: Option<f64>, inherited: Option<f64>| {
        own.or(inherited).ok_or_else(|| {
            ConfigError::field(
                format!("{at}.{name}"),
                "missing (no preset to inherit from)",
            )
        })
    };
    let ch = ChannelScenario {
        distance_m: doc
            .distance_m
            .or(base.as_ref().map(|b| b.distance_m))
            .unwrap_or(0.0),
        bandwidth_hz: pick(
            "bandwidth_hz",
            doc.bandwidth_hz,
            base.as_ref().map(|b| b.bandwidth_hz),
        )?,
        carrier_hz: doc
            .carrier_hz
            .or(base.as_ref().map(|b| b.carrier_hz))
            .unwrap_or(0.0),
        pathloss_gain: pick(
            "pathloss_gain",
            doc.pathloss_gain,
            base.as_ref().map(|b| b.pathloss_gain),
        )?,
        noise_psd: doc
            .noise_psd
            .or(base.as_ref().map(|b| b.noise_psd))
            .unwrap_or(super::THERMAL_NOISE_PSD),
        fading: doc
            .fading
            .or(base.as_ref().map(|b| b.fading))
            .unwrap_or(FadingMode::IidRayleigh),
    };
    positive(&format!("{at}.bandwidth_hz"), ch.bandwidth_hz)?;
    positive(&format!("{at}.pathloss_gain"), ch.pathloss_gain)?;
    positive(&format!("{at}.noise_psd"), ch.noise_psd)?;
    if let FadingMode::Clarke {
        doppler_hz: Some(fd),
    } = ch.fading
    {
        non_negative(&format!("{at}.fading.doppler_hz"), fd)?;
    }
    Ok(ch)
}

fn resolve_lut(
    spec: &LutSpec,
    at: &str,
    base_dir: Option<&Path>,
) -> Result<Vec<CompressionProfile>, ConfigError> {
    let rows = match spec {
        LutSpec::Preset(name) => lut::preset(name)?,
        LutSpec::Rows(rows) => rows.clone(),
        LutSpec::File { path } => {
            let full = match base_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            lut::read_csv(&full)?
        }
    };
    if rows.is_empty() {
        return Err(ConfigError::field(at, "look-up table is empty"));
    }
    for (i, row) in rows.iter().enumerate() {
        row.validate(&format!("{at}[{i}]"))?;
    }
    Ok(rows)
}

fn resolve(
    doc: Document,
    base_dir: Option<&Path>,
) -> Result<(Config, Vec<ConfigWarning>), ConfigError> {
    let mut warnings = Vec::new();

    let slot_duration = positive(
        "sim.slot_duration",
        doc.sim.slot_duration.unwrap_or(DEFAULT_SLOT),
    )?;
    let horizon = doc.sim.horizon.unwrap_or(DEFAULT_HORIZON);
    if horizon == 0 {
        return Err(ConfigError::field(
            "sim.horizon",
            "must be at least one slot",
        ));
    }
    let warmup = doc.sim.warmup.unwrap_or(horizon / 4);
    if warmup >= horizon {
        return Err(ConfigError::field(
            "sim.warmup",
            format!("{warmup} must be smaller than the horizon {horizon}"),
        ));
    }
    if !(doc.sim.v.is_finite() && doc.sim.v >= 0.0) {
        return Err(ConfigError::field(
            "sim.v",
            "must be finite and non-negative",
        ));
    }
    let sim = SimConfig {
        slot_duration,
        horizon,
        warmup,
        v: doc.sim.v,
        policy: doc.sim.policy.unwrap_or(PolicyKind::MuMeda),
        force_offload: doc.sim.force_offload.unwrap_or(false),
        rng_seed: doc.sim.rng_seed.unwrap_or(1),
        arrival_model: doc.sim.arrival_model.unwrap_or(ArrivalModel::Poisson),
    };

    let server = EsConfig {
        freq_set: doc.server.freq_set.resolve("server.freq_set")?,
        kappa: positive("server.kappa", doc.server.kappa.unwrap_or(KAPPA_REF))?,
        gamma: doc.server.gamma.unwrap_or(0.5),
        eta: non_negative("server.eta", doc.server.eta.unwrap_or(1.0))?,
        energy_avg: non_negative(
            "server.energy_avg",
            doc.server.energy_avg.unwrap_or(f64::INFINITY),
        )?,
    };
    if !(0.0..=1.0).contains(&server.gamma) {
        return Err(ConfigError::field("server.gamma", "must lie in [0, 1]"));
    }

    if doc.ue.is_empty() {
        return Err(ConfigError::field("ue", "at least one device is required"));
    }
    let total: usize = doc.ue.iter().map(|u| u.count.unwrap_or(1)).sum();
    let mut fleet = Vec::with_capacity(total);
    let mut explicit_delta = false;
    for (b, block) in doc.ue.iter().enumerate() {
        let at = format!("ue[{b}]");
        let count = block.count.unwrap_or(1);
        if count == 0 {
            return Err(ConfigError::field(
                format!("{at}.count"),
                "must be at least 1",
            ));
        }
        let lut = resolve_lut(&block.lut, &format!("{at}.lut"), base_dir)?;
        let freq_set = block.freq_set.resolve(&format!("{at}.freq_set"))?;
        let channel = resolve_channel(&block.channel, &format!("{at}.channel"))?;
        explicit_delta |= block.delta.is_some();
        let delta = non_negative(
            &format!("{at}.delta"),
            block.delta.unwrap_or(1.0 / total as f64),
        )?;
        let accuracy_avg = block.accuracy_avg.unwrap_or(0.0);
        if !(0.0..=1.0).contains(&accuracy_avg) {
            return Err(ConfigError::field(
                format!("{at}.accuracy_avg"),
                "must be a fraction in [0, 1]",
            ));
        }
        let template = UeConfig {
            id: 0,
            lut,
            freq_set,
            kappa: positive(&format!("{at}.kappa"), block.kappa.unwrap_or(KAPPA_REF))?,
            p_tx_max: positive(
                &format!("{at}.p_tx_max"),
                block.p_tx_max.unwrap_or(DEFAULT_P_TX_MAX),
            )?,
            channel,
            delta,
            arrival_mean: non_negative(&format!("{at}.arrival_mean"), block.arrival_mean)?,
            constraints: UeConstraints {
                delay_avg: positive(&format!("{at}.delay_avg"), block.delay_avg)?,
                accuracy_avg,
                energy_avg: non_negative(
                    &format!("{at}.energy_avg"),
                    block.energy_avg.unwrap_or(f64::INFINITY),
                )?,
            },
            step_sizes: StepSizes {
                mu: non_negative(&format!("{at}.mu"), block.mu.unwrap_or(1.0))?,
                nu: non_negative(&format!("{at}.nu"), block.nu.unwrap_or(1.0))?,
                lambda: non_negative(&format!("{at}.lambda"), block.lambda.unwrap_or(1.0))?,
            },
        };
        if let PolicyKind::FixedAccuracy { rho } = sim.policy {
            if !template.lut.iter().any(|p| p.rho == rho) {
                return Err(ConfigError::field(
                    format!("{at}.lut"),
                    format!("fixed-accuracy policy needs rho = {rho}, absent from this table"),
                ));
            }
        }
        for _ in 0..count {
            let mut ue = template.clone();
            ue.id = fleet.len();
            fleet.push(ue);
        }
    }

    let sum: f64 = fleet.iter().map(|u| u.delta).sum();
    if sum <= 0.0 {
        return Err(ConfigError::field("ue.delta", "energy weights sum to zero"));
    }
    if (sum - 1.0).abs() > 1e-9 {
        if explicit_delta {
            warnings.push(ConfigWarning::DeltaNormalized { original_sum: sum });
        }
        for ue in &mut fleet {
            ue.delta /= sum;
        }
    }

    Ok((Config { fleet, server, sim }, warnings))
}

/// Writes the fully expanded document for `config`.
pub(crate) fn to_document(config: &Config) -> String {
    let doc = Document {
        sim: SimDoc {
            slot_duration: Some(config.sim.slot_duration),
            horizon: Some(config.sim.horizon),
            warmup: Some(config.sim.warmup),
            v: config.sim.v,
            policy: Some(config.sim.policy),
            force_offload: Some(config.sim.force_offload),
            rng_seed: Some(config.sim.rng_seed),
            arrival_model: Some(config.sim.arrival_model),
        },
        server: ServerDoc {
            freq_set: FreqSpec::List(config.server.freq_set.clone()),
            kappa: Some(config.server.kappa),
            gamma: Some(config.server.gamma),
            eta: Some(config.server.eta),
            energy_avg: Some(config.server.energy_avg),
        },
        ue: config
            .fleet
            .iter()
            .map(|ue| UeDoc {
                count: None,
                lut: LutSpec::Rows(ue.lut.clone()),
                freq_set: FreqSpec::List(ue.freq_set.clone()),
                kappa: Some(ue.kappa),
                p_tx_max: Some(ue.p_tx_max),
                channel: ChannelSpec::Table(ChannelDoc {
                    preset: None,
                    distance_m: Some(ue.channel.distance_m),
                    bandwidth_hz: Some(ue.channel.bandwidth_hz),
                    carrier_hz: Some(ue.channel.carrier_hz),
                    pathloss_gain: Some(ue.channel.pathloss_gain),
                    noise_psd: Some(ue.channel.noise_psd),
                    fading: Some(ue.channel.fading),
                }),
                delta: Some(ue.delta),
                arrival_mean: ue.arrival_mean,
                delay_avg: ue.constraints.delay_avg,
                accuracy_avg: Some(ue.constraints.accuracy_avg),
                energy_avg: Some(ue.constraints.energy_avg),
                mu: Some(ue.step_sizes.mu),
                nu: Some(ue.step_sizes.nu),
                lambda: Some(ue.step_sizes.lambda),
            })
            .collect(),
    };
    toml::to_string(&doc).expect("configuration documents always serialize")
}

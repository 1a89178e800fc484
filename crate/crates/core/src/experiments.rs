//! Reference scenarios and the named experiment bundles.
//!
//! Every bundle writes CSV files into an output directory: V sweeps in the
//! summary format of [`crate::io`], offload shares and energy traces in their
//! own row formats.

use std::path::{Path, PathBuf};

use crate::engine::{self, RunSummary};
use crate::error::{ConfigError, Result};
use crate::io::{self, EnergyTraceRow, OffloadRow};
use crate::model::{
    lut, uniform_freq_set, ArrivalModel, ChannelScenario, CompressionProfile, Config, EsConfig,
    PolicyKind, SimConfig, StepSizes, UeConfig, UeConstraints, DEFAULT_HORIZON, DEFAULT_P_TX_MAX,
    DEFAULT_SLOT, KAPPA_REF,
};

pub const EXPERIMENTS: &[&str] = &[
    "meda_channelB_offload",
    "meda_opportunistic",
    "baselines_k3",
    "made_k3",
];

/// Device clock levels, `{0.1, ..., 1} x 1.4 GHz`.
pub fn device_freqs() -> Vec<f64> {
    uniform_freq_set(1.4e9, 10)
}

/// Server clock levels, `{0.1, ..., 1} x 4.5 GHz`.
pub fn server_freqs() -> Vec<f64> {
    uniform_freq_set(4.5e9, 10)
}

/// `1e2 ... 1e7`, eleven log-spaced points.
pub fn default_v_grid() -> Vec<f64> {
    log_grid(1e2, 1e7, 11)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| {
            let e = a + (b - a) * i as f64 / (n - 1) as f64;
            // Snap to the decimal representation so 10^2.5 prints cleanly.
            format!("{:.6e}", 10f64.powf(e)).parse().unwrap()
        })
        .collect()
}

/// Parses a V list: empty for the default grid, `lo:hi:Nlog` for a log grid,
/// `lo:hi:N` for a linear one, or comma-separated values.
pub fn parse_v_spec(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let spec = spec.trim();
    let bad = |why: &str| ConfigError::field("v", format!("`{spec}`: {why}"));
    if spec.is_empty() {
        return Ok(default_v_grid());
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let parts: Vec<&str> = spec.split(':').collect();
    let vs = match parts.as_slice() {
        [lo, hi, count] => {
            let (count, log) = match count.strip_suffix("log") {
                Some(c) => (c, true),
                None => (*count, false),
            };
            let n: usize = count.trim().parse().map_err(|_| bad("bad point count"))?;
            let (lo, hi) = (num(lo)?, num(hi)?);
            if n == 0 || lo > hi {
                return Err(bad("empty range"));
            }
            if log {
                if lo <= 0.0 {
                    return Err(bad("log grid needs positive bounds"));
                }
                log_grid(lo, hi, n)
            } else if n == 1 {
                vec![lo]
            } else {
                (0..n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                    .collect()
            }
        }
        [_] => spec.split(',').map(num).collect::<Result<_, _>>()?,
        _ => return Err(bad("expected `lo:hi:N[log]` or a comma list")),
    };
    if vs.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(bad("V must be finite and non-negative"));
    }
    Ok(vs)
}

/// One device of the reference scenarios: `A_bar = 2` DU/slot, 100 mW.
pub fn reference_ue(
    id: usize,
    lut: Vec<CompressionProfile>,
    channel: ChannelScenario,
    kappa: f64,
    constraints: UeConstraints,
    step_sizes: StepSizes,
) -> UeConfig {
    UeConfig {
        id,
        lut,
        freq_set: device_freqs(),
        kappa,
        p_tx_max: DEFAULT_P_TX_MAX,
        channel,
        delta: 1.0,
        arrival_mean: 2.0,
        constraints,
        step_sizes,
    }
}

fn assemble(mut fleet: Vec<UeConfig>, server: EsConfig, sim: SimConfig) -> Config {
    let k = fleet.len() as f64;
    for ue in &mut fleet {
        ue.delta = 1.0 / k;
    }
    Config { fleet, server, sim }
}

fn sim(policy: PolicyKind, v: f64, force_offload: bool) -> SimConfig {
    SimConfig {
        slot_duration: DEFAULT_SLOT,
        horizon: DEFAULT_HORIZON,
        warmup: DEFAULT_HORIZON / 4,
        v,
        policy,
        force_offload,
        rng_seed: 1,
        arrival_model: ArrivalModel::Poisson,
    }
}

fn server(energy_avg: f64) -> EsConfig {
    EsConfig {
        freq_set: server_freqs(),
        kappa: KAPPA_REF,
        gamma: 0.5,
        eta: 1.0,
        energy_avg,
    }
}

/// Horizon of single operating-point runs. Large V needs more slots for the
/// virtual queues to settle than the sweep default.
pub const OPERATING_HORIZON: u64 = 50_000;

/// Stretches `c` to [`OPERATING_HORIZON`] with a quarter of it as warmup.
pub fn at_operating_horizon(mut c: Config) -> Config {
    c.sim.horizon = OPERATING_HORIZON;
    c.sim.warmup = OPERATING_HORIZON / 4;
    c
}

/// Step sizes of the forced-offload and baseline scenarios.
pub const MEDA_STEPS: StepSizes = StepSizes {
    mu: 12.0,
    nu: 500.0,
    lambda: 1.0,
};

/// Step sizes of the mixed-channel scenario. Smaller queue weights keep the
/// energy term in play at the low end of the V grid.
pub const OPPORTUNISTIC_STEPS: StepSizes = StepSizes {
    mu: 1.25,
    nu: 3.0,
    lambda: 1.0,
};

/// Step sizes of the accuracy-maximizing scenario.
pub const MADE_STEPS: StepSizes = StepSizes {
    mu: 12.0,
    nu: 1.0,
    lambda: 300.0,
};

/// Five devices on the long-range channel, always offloading.
pub fn channel_b_offload(g_avg: f64, lut_name: &str, v: f64) -> Result<Config, ConfigError> {
    let rows = lut::preset(lut_name)?;
    let fleet = (0..5)
        .map(|k| {
            reference_ue(
                k,
                rows.clone(),
                ChannelScenario::preset_b(),
                KAPPA_REF,
                UeConstraints {
                    delay_avg: 0.2,
                    accuracy_avg: g_avg,
                    energy_avg: f64::INFINITY,
                },
                MEDA_STEPS,
            )
        })
        .collect();
    Ok(assemble(
        fleet,
        server(f64::INFINITY),
        sim(PolicyKind::MuMeda, v, true),
    ))
}

/// Channel tag of device `k` in the mixed five-device scenario: devices 0 and
/// 3 sit on the short-range channel.
pub fn mixed_channel_tag(k: usize) -> &'static str {
    if k == 0 || k == 3 {
        "A"
    } else {
        "B"
    }
}

/// Five devices on mixed channels; `force_offload` selects the always-offload
/// variant for comparison.
pub fn opportunistic(g_avg: f64, force_offload: bool, v: f64) -> Config {
    let fleet = (0..5)
        .map(|k| {
            let channel = ChannelScenario::preset(mixed_channel_tag(k)).expect("known preset");
            reference_ue(
                k,
                lut::deep_ce(),
                channel,
                KAPPA_REF,
                UeConstraints {
                    delay_avg: 0.2,
                    accuracy_avg: g_avg,
                    energy_avg: f64::INFINITY,
                },
                OPPORTUNISTIC_STEPS,
            )
        })
        .collect();
    assemble(
        fleet,
        server(f64::INFINITY),
        sim(PolicyKind::MuMeda, v, force_offload),
    )
}

/// Channel tag and capacitance multiplier of the three-device scenarios.
pub const K3_DEVICES: [(&str, f64); 3] = [("A", 10.0), ("A", 20.0), ("B", 30.0)];

fn k3_fleet(
    lut: Vec<CompressionProfile>,
    constraints: UeConstraints,
    steps: StepSizes,
) -> Vec<UeConfig> {
    K3_DEVICES
        .iter()
        .enumerate()
        .map(|(k, (tag, mult))| {
            reference_ue(
                k,
                lut.clone(),
                ChannelScenario::preset(tag).expect("known preset"),
                mult * KAPPA_REF,
                constraints,
                steps,
            )
        })
        .collect()
}

/// Operating point of the baseline comparison.
pub const BASELINES_V: f64 = 1e5;

/// Three heterogeneous devices with the short encoder, 92% / 0.2 s targets.
pub fn baselines_k3(policy: PolicyKind) -> Config {
    let fleet = k3_fleet(
        lut::short_ce(),
        UeConstraints {
            delay_avg: 0.2,
            accuracy_avg: 0.92,
            energy_avg: f64::INFINITY,
        },
        MEDA_STEPS,
    );
    assemble(
        fleet,
        server(f64::INFINITY),
        sim(policy, BASELINES_V, false),
    )
}

/// Device energy budget of the accuracy-maximizing scenario, J/slot.
pub const MADE_ENERGY_AVG: f64 = 0.128;
/// Operating point of the accuracy-maximizing offload histogram.
pub const MADE_V: f64 = 1e5;

/// Three heterogeneous devices offered both encoders, 128 mJ budgets.
pub fn made_k3(v: f64) -> Config {
    let fleet = k3_fleet(
        lut::deep_and_short(),
        UeConstraints {
            delay_avg: 0.2,
            accuracy_avg: 0.0,
            energy_avg: MADE_ENERGY_AVG,
        },
        MADE_STEPS,
    );
    assemble(
        fleet,
        server(f64::INFINITY),
        sim(PolicyKind::MuMade, v, false),
    )
}

/// Accuracy targets of the energy-minimizing sweeps.
pub const MEDA_ACCURACY_TARGETS: [f64; 3] = [0.70, 0.80, 0.915];
/// Operating point of the forced-offload constraint checks.
pub const CHANNEL_B_V: f64 = 1e6;
/// Operating point of the opportunistic offload histogram.
pub const OPPORTUNISTIC_V: f64 = 1e6;

/// Overrides applied to every run of a bundle.
#[derive(Debug, Clone, Default)]
pub struct BundleOptions {
    pub horizon: Option<u64>,
    pub warmup: Option<u64>,
    pub seed: Option<u64>,
    pub v_grid: Option<Vec<f64>>,
}

impl BundleOptions {
    /// Applies the overrides to a sweep configuration.
    pub fn apply(&self, mut c: Config) -> Config {
        if let Some(h) = self.horizon {
            c.sim.horizon = h;
            c.sim.warmup = self.warmup.unwrap_or(h / 4);
        }
        if let Some(w) = self.warmup {
            c.sim.warmup = w;
        }
        if let Some(s) = self.seed {
            c.sim.rng_seed = s;
        }
        c
    }

    /// Like [`BundleOptions::apply`] for a single operating-point run, which
    /// defaults to [`OPERATING_HORIZON`].
    pub fn apply_operating(&self, c: Config) -> Config {
        self.apply(at_operating_horizon(c))
    }

    fn grid(&self) -> Vec<f64> {
        self.v_grid.clone().unwrap_or_else(default_v_grid)
    }
}

/// Files a bundle wrote, with the summaries behind them.
#[derive(Debug, Clone)]
pub struct BundleOutput {
    pub files: Vec<PathBuf>,
    pub summaries: Vec<RunSummary>,
}

fn labelled(mut runs: Vec<RunSummary>, label: &str) -> Vec<RunSummary> {
    for r in &mut runs {
        r.label = label.to_string();
    }
    runs
}

fn offload_rows(label: &str, s: &RunSummary, tag: impl Fn(usize) -> String) -> Vec<OffloadRow> {
    s.ues
        .iter()
        .enumerate()
        .map(|(k, u)| OffloadRow {
            label: label.to_string(),
            v: s.v,
            ue: k,
            channel: tag(k),
            offload_pct: 100.0 * u.offload_frac,
        })
        .collect()
}

/// Runs a named bundle and writes its CSVs under `out`.
pub fn run_bundle(name: &str, opts: &BundleOptions, out: &Path) -> Result<BundleOutput> {
    std::fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut summaries = Vec::new();
    match name {
        "meda_channelB_offload" => {
            for lut_name in ["deep_ce", "short_ce"] {
                for g in MEDA_ACCURACY_TARGETS {
                    let c = opts.apply(channel_b_offload(g, lut_name, 0.0)?);
                    let label = format!("{lut_name} G={g}");
                    summaries.extend(labelled(engine::sweep(&c, &opts.grid())?, &label));
                }
            }
            let path = out.join("tradeoff.csv");
            io::write_summaries(&path, &summaries)?;
            files.push(path);

            let mut points = Vec::new();
            for lut_name in ["deep_ce", "short_ce"] {
                for g in MEDA_ACCURACY_TARGETS {
                    let c = opts.apply_operating(channel_b_offload(g, lut_name, CHANNEL_B_V)?);
                    let mut s = engine::run(&c)?;
                    s.label = format!("{lut_name} G={g}");
                    points.push(s);
                }
            }
            let path = out.join("operating.csv");
            io::write_summaries(&path, &points)?;
            files.push(path);
            summaries.extend(points);
        }
        "meda_opportunistic" => {
            for g in MEDA_ACCURACY_TARGETS {
                for (force, mode) in [(false, "opportunistic"), (true, "offload")] {
                    let c = opts.apply(opportunistic(g, force, 0.0));
                    let label = format!("{mode} G={g}");
                    summaries.extend(labelled(engine::sweep(&c, &opts.grid())?, &label));
                }
            }
            let path = out.join("tradeoff.csv");
            io::write_summaries(&path, &summaries)?;
            files.push(path);

            let c = opts.apply_operating(opportunistic(0.70, false, OPPORTUNISTIC_V));
            let s = engine::run(&c)?;
            let rows = offload_rows("opportunistic G=0.7", &s, |k| {
                mixed_channel_tag(k).to_string()
            });
            let path = out.join("offload_hist.csv");
            io::write_rows(&path, &rows)?;
            files.push(path);
        }
        "baselines_k3" => {
            let mut traces = Vec::new();
            for policy in [
                PolicyKind::MuMeda,
                PolicyKind::FixedAccuracy { rho: 8 },
                PolicyKind::HybridFixedRate,
            ] {
                let c = opts.apply_operating(baselines_k3(policy));
                let mut slot_rows = Vec::new();
                let s = engine::run_with(&c, |r| {
                    for (k, u) in r.ues.iter().enumerate() {
                        slot_rows.push(EnergyTraceRow {
                            policy: policy.name(),
                            slot: r.slot,
                            ue: k,
                            energy_j: u.e_tx + u.e_comp,
                        });
                    }
                    Ok(())
                })?;
                traces.extend(slot_rows);
                summaries.push(s);
            }
            let path = out.join("summary.csv");
            io::write_summaries(&path, &summaries)?;
            files.push(path);
            let path = out.join("energy_trace.csv");
            io::write_rows(&path, &traces)?;
            files.push(path);
        }
        "made_k3" => {
            let c = opts.apply(made_k3(0.0));
            summaries.extend(labelled(engine::sweep(&c, &opts.grid())?, "mu_made"));
            let path = out.join("tradeoff.csv");
            io::write_summaries(&path, &summaries)?;
            files.push(path);

            let s = engine::run(&opts.apply_operating(made_k3(MADE_V)))?;
            let rows = offload_rows("mu_made", &s, |k| K3_DEVICES[k].0.to_string());
            let path = out.join("offload_hist.csv");
            io::write_rows(&path, &rows)?;
            files.push(path);
        }
        other => {
            return Err(ConfigError::UnknownPreset {
                kind: "experiment",
                name: other.to_string(),
                known: EXPERIMENTS.join(", "),
            }
            .into())
        }
    }
    Ok(BundleOutput { files, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_endpoints() {
        let g = default_v_grid();
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 1e2);
        assert_eq!(g[10], 1e7);
        assert_eq!(g[2], 1e3);
    }

    #[test]
    fn v_spec_forms() {
        assert_eq!(parse_v_spec("1e2:1e7:11log").unwrap().len(), 11);
        assert_eq!(parse_v_spec("").unwrap(), default_v_grid());
        assert_eq!(parse_v_spec("1,10,100").unwrap(), vec![1.0, 10.0, 100.0]);
        assert_eq!(parse_v_spec("0:10:3").unwrap(), vec![0.0, 5.0, 10.0]);
        assert!(parse_v_spec("1:2:3:4").is_err());
        assert!(parse_v_spec("0:10:3log").is_err());
        assert!(parse_v_spec("x").is_err());
    }

    #[test]
    fn mixed_tags() {
        let tags: Vec<_> = (0..5).map(mixed_channel_tag).collect();
        assert_eq!(tags, ["A", "B", "B", "A", "B"]);
    }

    #[test]
    fn scenarios_have_normalized_weights() {
        for c in [
            channel_b_offload(0.8, "deep_ce", 1e6).unwrap(),
            opportunistic(0.7, false, 1e6),
            baselines_k3(PolicyKind::MuMeda),
            made_k3(1e5),
        ] {
            let s: f64 = c.fleet.iter().map(|u| u.delta).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}

//! The slot loop and the V-sweep harness.
//!
//! Every slot draws the channels, lets the policy decide from a snapshot of
//! the queues, draws arrivals, charges energy and advances the queues. Runs
//! are deterministic in `sim.rng_seed`: each device owns separate channel and
//! arrival streams, so two policies run with the same seed see the same
//! channels and arrivals.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelState, FadingChannel};
use crate::error::{Error, Result};
use crate::model::{ArrivalModel, Config, PolicyKind};
use crate::policies::{Policy, SlotState, UeAction};
use crate::queueing::{
    self, ConstraintFamily, DriftCheck, QueueBank, SlotInputs, UeTransfer, VirtualObservation,
};

/// Stream ids: channel streams are `k`, arrival streams `ARRIVAL_STREAM + k`.
const ARRIVAL_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeSlot {
    pub action: UeAction,
    pub gain_sq: f64,
    pub arrivals: u64,
    pub e_tx: f64,
    pub e_comp: f64,
    pub offloaded: u64,
    pub local: u64,
    /// Accuracy charged this slot.
    pub accuracy: f64,
    /// Queue values after the slot.
    pub q_ue: u64,
    pub q_tot: f64,
    pub z: f64,
    /// Accuracy queue (energy-minimizing policies) or energy queue (accuracy-maximizing one).
    pub y_or_s: f64,
    pub drift: DriftCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsSlot {
    pub f_s: f64,
    pub f_split: Vec<Vec<f64>>,
    pub energy: f64,
    /// DUs classified per device this slot.
    pub classified: Vec<u64>,
    pub q_es: Vec<Vec<u64>>,
    pub o: f64,
}

/// Audited outcome of one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub ues: Vec<UeSlot>,
    pub es: EsSlot,
    /// `(1 - gamma) E_s + gamma * sum_k delta_k (E_c + E_tx)`.
    pub e_tot: f64,
}

/// Weighted system energy of one slot.
pub fn weighted_energy(config: &Config, ue_energy: &[f64], es_energy: f64) -> f64 {
    let gamma = config.server.gamma;
    let devices: f64 = config
        .fleet
        .iter()
        .zip(ue_energy)
        .map(|(ue, e)| ue.delta * e)
        .sum();
    (1.0 - gamma) * es_energy + gamma * devices
}

/// Time averages of one device over the measured window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeSummary {
    /// Transmission plus computation energy, J/slot.
    pub energy: f64,
    /// Mean delay through Little's law, s.
    pub delay: f64,
    pub accuracy: f64,
    /// Share of classified-or-shipped DUs that were offloaded.
    pub offload_frac: f64,
    pub mean_q_tot: f64,
    pub delay_slack: f64,
    /// `accuracy - accuracy_avg` (energy-minimizing policies).
    pub accuracy_slack: f64,
    /// `energy_avg - energy` (accuracy-maximizing policy).
    pub energy_slack: f64,
    pub z_final: f64,
    pub y_final: f64,
    pub s_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub policy: String,
    pub v: f64,
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
    pub ues: Vec<UeSummary>,
    /// Server energy, J/slot.
    pub es_energy: f64,
    pub es_energy_slack: f64,
    pub o_final: f64,
    /// Mean weighted system energy, J/slot.
    pub weighted_energy: f64,
    /// Largest final virtual queue divided by the horizon.
    pub max_virtual_rate: f64,
    pub converged: bool,
    pub drift_violations: u64,
    pub arrivals_total: u64,
    pub classified_total: u64,
    pub backlog_end: u64,
}

impl RunSummary {
    /// Mean device energy over the fleet.
    pub fn mean_ue_energy(&self) -> f64 {
        self.ues.iter().map(|u| u.energy).sum::<f64>() / self.ues.len() as f64
    }

    pub fn mean_delay(&self) -> f64 {
        self.ues.iter().map(|u| u.delay).sum::<f64>() / self.ues.len() as f64
    }

    pub fn mean_accuracy(&self) -> f64 {
        self.ues.iter().map(|u| u.accuracy).sum::<f64>() / self.ues.len() as f64
    }
}

/// Growth per slot a settled queue may still show.
pub const CONVERGENCE_SLOPE: f64 = 1e-2;

/// True when a queue trace has stopped growing: the mean of its last window
/// exceeds the mean of the window before by less than `CONVERGENCE_SLOPE`
/// per slot.
pub fn detect_convergence(trace: &[f64], window: usize) -> bool {
    if window == 0 || trace.len() < 2 * window {
        return false;
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let n = trace.len();
    let last = mean(&trace[n - window..]);
    let prev = mean(&trace[n - 2 * window..n - window]);
    (last - prev) / (window as f64) < CONVERGENCE_SLOPE
}

/// Prefix means of `trace`.
pub fn running_mean(trace: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    trace
        .iter()
        .enumerate()
        .map(|(i, x)| {
            sum += x;
            sum / (i + 1) as f64
        })
        .collect()
}

/// Seed for sweep point `index`; index 0 keeps the base seed.
pub fn derive_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

enum Arrivals {
    Poisson(Poisson<f64>),
    Deterministic(f64),
    None,
}

impl Arrivals {
    fn new(mean: f64, model: ArrivalModel) -> Self {
        if mean <= 0.0 {
            return Arrivals::None;
        }
        match model {
            ArrivalModel::Poisson => {
                Arrivals::Poisson(Poisson::new(mean).expect("positive finite mean"))
            }
            ArrivalModel::Deterministic => Arrivals::Deterministic(mean),
        }
    }

    fn draw(&self, t: u64, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            Arrivals::Poisson(p) => p.sample(rng) as u64,
            // floor((t+1) a) - floor(t a): floor/ceil alternation with exact mean.
            Arrivals::Deterministic(a) => {
                ((t + 1) as f64 * a).floor() as u64 - (t as f64 * a).floor() as u64
            }
            Arrivals::None => 0,
        }
    }
}

fn finite(slot: u64, what: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite {
            slot,
            what: what.to_string(),
        })
    }
}

/// Runs `config` and returns its summary.
pub fn run(config: &Config) -> Result<RunSummary> {
    run_with(config, |_| Ok(()))
}

/// Runs `config`, keeping every slot record.
pub fn run_recorded(config: &Config) -> Result<(RunSummary, Vec<SlotRecord>)> {
    let mut records = Vec::with_capacity(config.sim.horizon as usize);
    let summary = run_with(config, |r| {
        records.push(r.clone());
        Ok(())
    })?;
    Ok((summary, records))
}

/// Runs `config`, handing each slot record to `sink` as it is produced.
pub fn run_with<F>(config: &Config, mut sink: F) -> Result<RunSummary>
where
    F: FnMut(&SlotRecord) -> Result<()>,
{
    let policy = Policy::new(config)?;
    let tau = config.tau();
    let k_count = config.num_ues();
    let seed = config.sim.rng_seed;
    let family = if config.sim.policy.maximizes_accuracy() {
        ConstraintFamily::DelayEnergy
    } else {
        ConstraintFamily::DelayAccuracy
    };

    let mut channel_rngs: Vec<ChaCha8Rng> = (0..k_count).map(|k| stream(seed, k as u64)).collect();
    let mut arrival_rngs: Vec<ChaCha8Rng> = (0..k_count)
        .map(|k| stream(seed, ARRIVAL_STREAM + k as u64))
        .collect();
    let mut channels: Vec<FadingChannel> = config
        .fleet
        .iter()
        .zip(channel_rngs.iter_mut())
        .map(|(ue, rng)| FadingChannel::new(&ue.channel, tau, rng))
        .collect();
    let arrivals: Vec<Arrivals> = config
        .fleet
        .iter()
        .map(|ue| Arrivals::new(ue.arrival_mean, config.sim.arrival_model))
        .collect();

    let mut bank = QueueBank::new(&config.fleet);
    let mut acc = Accumulator::new(k_count);
    let mut traces: Vec<Vec<f64>> =
        vec![Vec::with_capacity(config.sim.horizon as usize); 2 * k_count + 1];
    let mut drift_violations = 0u64;
    let mut arrivals_total = 0u64;
    let mut classified_total = 0u64;

    for t in 0..config.sim.horizon {
        let gains: Vec<ChannelState> = channels
            .iter_mut()
            .zip(channel_rngs.iter_mut())
            .map(|(ch, rng)| ch.next_gain(rng))
            .collect();
        let state = SlotState {
            slot: t,
            channels: gains,
            queues: bank.clone(),
        };
        let decision = policy.decide(&state, config)?;
        let arrived: Vec<u64> = arrivals
            .iter()
            .zip(arrival_rngs.iter_mut())
            .map(|(a, rng)| a.draw(t, rng))
            .collect();

        let mut ue_energy = Vec::with_capacity(k_count);
        let mut accuracy = Vec::with_capacity(k_count);
        for (k, d) in decision.ues.iter().enumerate() {
            ue_energy.push(finite(t, &format!("ue[{k}].energy"), d.e_tx + d.e_comp)?);
            accuracy.push(config.fleet[k].lut[d.action.lut_index].accuracy);
        }
        let es_energy = finite(t, "es.energy", decision.es.energy)?;
        let e_tot = weighted_energy(config, &ue_energy, es_energy);

        let inputs = SlotInputs {
            transfers: decision
                .ues
                .iter()
                .map(|d| UeTransfer {
                    offload: d.action.offload,
                    lut_index: d.action.lut_index,
                    capacity: d.service,
                })
                .collect(),
            es_capacity: decision.es.service.clone(),
            arrivals: arrived.clone(),
            observation: VirtualObservation {
                accuracy: accuracy.clone(),
                device_energy: ue_energy.clone(),
                server_energy: es_energy,
            },
        };
        let tr = bank.advance_slot(&inputs, &config.fleet, &config.server, tau, family);

        for k in 0..k_count {
            finite(t, &format!("ue[{k}].z"), bank.z[k])?;
            finite(t, &format!("ue[{k}].y"), bank.y[k])?;
            finite(t, &format!("ue[{k}].s"), bank.s[k])?;
        }
        finite(t, "es.o", bank.o)?;

        let mut ues = Vec::with_capacity(k_count);
        for (k, (d, u)) in decision.ues.iter().zip(&tr.ues).enumerate() {
            if !u.drift.holds() {
                drift_violations += 1;
                tracing::warn!(slot = t, ue = k, ?u.drift, "delay-queue drift bound violated");
            }
            arrivals_total += arrived[k];
            classified_total += u.local + u.server_classified;
            let y_or_s = match family {
                ConstraintFamily::DelayAccuracy => bank.y[k],
                ConstraintFamily::DelayEnergy => bank.s[k],
            };
            traces[2 * k].push(bank.z[k]);
            traces[2 * k + 1].push(y_or_s);
            ues.push(UeSlot {
                action: d.action,
                gain_sq: state.channels[k].gain_sq,
                arrivals: arrived[k],
                e_tx: d.e_tx,
                e_comp: d.e_comp,
                offloaded: u.offloaded,
                local: u.local,
                accuracy: accuracy[k],
                q_ue: bank.q_ue[k],
                q_tot: u.q_tot,
                z: bank.z[k],
                y_or_s,
                drift: u.drift,
            });
        }
        traces[2 * k_count].push(bank.o);

        let record = SlotRecord {
            slot: t,
            ues,
            es: EsSlot {
                f_s: decision.es.action.f_s,
                f_split: decision.es.action.f_split.clone(),
                energy: es_energy,
                classified: tr.ues.iter().map(|u| u.server_classified).collect(),
                q_es: bank.q_es.clone(),
                o: bank.o,
            },
            e_tot,
        };
        if t >= config.sim.warmup {
            acc.add(&record);
        }
        sink(&record)?;
    }

    let horizon = config.sim.horizon.max(1) as f64;
    let n = acc.slots.max(1) as f64;
    let ues: Vec<UeSummary> = config
        .fleet
        .iter()
        .enumerate()
        .map(|(k, ue)| {
            let mean_q_tot = acc.q_tot[k] / n;
            let delay = queueing::delay_estimate(mean_q_tot, ue.arrival_mean, tau);
            let energy = acc.energy[k] / n;
            let accuracy = acc.accuracy[k] / n;
            let moved = acc.offloaded[k] + acc.local[k];
            UeSummary {
                energy,
                delay,
                accuracy,
                offload_frac: if moved == 0 {
                    0.0
                } else {
                    acc.offloaded[k] as f64 / moved as f64
                },
                mean_q_tot,
                delay_slack: ue.constraints.delay_avg - delay,
                accuracy_slack: accuracy - ue.constraints.accuracy_avg,
                energy_slack: ue.constraints.energy_avg - energy,
                z_final: bank.z[k],
                y_final: bank.y[k],
                s_final: bank.s[k],
            }
        })
        .collect();
    let max_virtual = bank
        .z
        .iter()
        .chain(&bank.y)
        .chain(&bank.s)
        .chain(std::iter::once(&bank.o))
        .cloned()
        .fold(0.0, f64::max);
    let measured = config.sim.horizon.saturating_sub(config.sim.warmup) as usize;
    let window = measured / 10;
    let converged = traces.iter().all(|tr| {
        let tail = &tr[tr.len() - measured.min(tr.len())..];
        detect_convergence(tail, window)
    });
    let es_energy = acc.es_energy / n;
    Ok(RunSummary {
        label: config.sim.policy.name(),
        policy: config.sim.policy.name(),
        v: config.sim.v,
        horizon: config.sim.horizon,
        warmup: config.sim.warmup,
        seed,
        ues,
        es_energy,
        es_energy_slack: config.server.energy_avg - es_energy,
        o_final: bank.o,
        weighted_energy: acc.e_tot / n,
        max_virtual_rate: max_virtual / horizon,
        converged,
        drift_violations,
        arrivals_total,
        classified_total,
        backlog_end: bank.backlog(),
    })
}

struct Accumulator {
    slots: u64,
    energy: Vec<f64>,
    accuracy: Vec<f64>,
    q_tot: Vec<f64>,
    offloaded: Vec<u64>,
    local: Vec<u64>,
    es_energy: f64,
    e_tot: f64,
}

impl Accumulator {
    fn new(k: usize) -> Self {
        Accumulator {
            slots: 0,
            energy: vec![0.0; k],
            accuracy: vec![0.0; k],
            q_tot: vec![0.0; k],
            offloaded: vec![0; k],
            local: vec![0; k],
            es_energy: 0.0,
            e_tot: 0.0,
        }
    }

    fn add(&mut self, r: &SlotRecord) {
        self.slots += 1;
        for (k, u) in r.ues.iter().enumerate() {
            self.energy[k] += u.e_tx + u.e_comp;
            self.accuracy[k] += u.accuracy;
            self.q_tot[k] += u.q_tot;
            self.offloaded[k] += u.offloaded;
            self.local[k] += u.local;
        }
        self.es_energy += r.es.energy;
        self.e_tot += r.e_tot;
    }
}

/// Runs one independent simulation per `v`, in parallel, ordered by
/// increasing `v`. Point `i` uses the seed `derive_seed(seed, i)`.
pub fn sweep(config: &Config, v_list: &[f64]) -> Result<Vec<RunSummary>> {
    let mut vs = v_list.to_vec();
    vs.sort_by(f64::total_cmp);
    vs.par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut c = config.with_v(v);
            c.sim.rng_seed = derive_seed(config.sim.rng_seed, i);
            run(&c)
        })
        .collect()
}

/// Same runs as [`sweep`] for several policies sharing seeds point by point.
pub fn sweep_policies(
    config: &Config,
    policies: &[PolicyKind],
    v_list: &[f64],
) -> Result<Vec<Vec<RunSummary>>> {
    policies
        .iter()
        .map(|p| sweep(&config.with_policy(*p), v_list))
        .collect()
}

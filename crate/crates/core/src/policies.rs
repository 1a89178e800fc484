//! Per-slot decisions for the two drift-plus-penalty controllers and the two
//! baselines.
//!
//! Each device solves its own subproblem from a read-only [`SlotState`]; the
//! server then splits its clock over the per-profile queues. The device search
//! is exhaustive over offload flag, profile and clock. For the rate it tries
//! the closed-form stationary point and then the floor boundaries
//! `n W / (tau - setup)` around it, which are the only rates that can be
//! optimal once the DU counts are floored.

use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelState};
use crate::error::{ConfigError, Error, Result};
use crate::model::{Config, PolicyKind, UeConfig};
use crate::queueing::{self, QueueBank};
use crate::solvers::{self, KnapsackItem, RateProblem};

/// Everything a policy sees at the start of a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotState {
    pub slot: u64,
    pub channels: Vec<ChannelState>,
    pub queues: QueueBank,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeAction {
    pub offload: bool,
    /// Row of the device LUT.
    pub lut_index: usize,
    pub rho: u32,
    pub f_d: f64,
    /// Zero unless offloading.
    pub rate: f64,
}

/// A device action with its evaluated cost and consequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeDecision {
    pub action: UeAction,
    pub cost: f64,
    /// DUs the device can drain this slot, before clamping to its backlog.
    pub service: u64,
    pub e_tx: f64,
    pub e_comp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsAction {
    pub f_s: f64,
    /// Clock granted to queue `(k, i)`, Hz.
    pub f_split: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsDecision {
    pub action: EsAction,
    pub cost: f64,
    /// DUs each queue can drain this slot.
    pub service: Vec<Vec<u64>>,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotDecision {
    pub ues: Vec<UeDecision>,
    pub es: EsDecision,
}

/// Prices in a device cost: `energy_coeff * (E_tx + E_c) - accuracy_coeff * G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeWeights {
    pub energy_coeff: f64,
    pub accuracy_coeff: f64,
}

impl UeWeights {
    /// `V gamma delta` on energy, `nu Y` on accuracy.
    pub fn meda(k: usize, state: &SlotState, config: &Config) -> Self {
        let ue = &config.fleet[k];
        UeWeights {
            energy_coeff: config.sim.v * config.server.gamma * ue.delta,
            accuracy_coeff: ue.step_sizes.nu * state.queues.y[k],
        }
    }

    /// `lambda S` on energy, `V` on accuracy.
    pub fn made(k: usize, state: &SlotState, config: &Config) -> Self {
        let ue = &config.fleet[k];
        UeWeights {
            energy_coeff: ue.step_sizes.lambda * state.queues.s[k],
            accuracy_coeff: config.sim.v,
        }
    }
}

/// Exact per-slot device cost of `action`, with floored DU counts.
pub fn ue_cost(
    k: usize,
    state: &SlotState,
    config: &Config,
    weights: UeWeights,
    action: &UeAction,
) -> Result<UeDecision> {
    let ue = &config.fleet[k];
    let tau = config.tau();
    let profile = &ue.lut[action.lut_index];
    let q = &state.queues;
    let q_ue = q.q_ue[k];
    let service = if action.offload {
        queueing::n_offload(profile, action.f_d, action.rate, tau)?
    } else {
        if action.rate != 0.0 {
            return Err(Error::Contract("local action with non-zero rate".into()));
        }
        queueing::n_local(profile, action.f_d, tau)
    };
    let e_tx = channel::tx_energy(action.rate, &state.channels[k], ue, tau)?;
    let e_comp = channel::comp_energy(action.f_d, ue.kappa, tau);

    let mu = ue.step_sizes.mu;
    let l = ue.lut_len() as f64;
    let n = service.min(q_ue) as f64;
    let es_term = if action.offload {
        q.p_hat[k][action.lut_index] * q.q_es[k][action.lut_index] as f64
    } else {
        0.0
    };
    let queue_terms = l * mu * mu * n * (es_term - q_ue as f64) + mu * q.z[k] * (q_ue as f64 - n);
    let cost = queue_terms - weights.accuracy_coeff * profile.accuracy
        + weights.energy_coeff * (e_tx + e_comp);
    Ok(UeDecision {
        action: *action,
        cost,
        service,
        e_tx,
        e_comp,
    })
}

/// Which part of the action space a device search may use.
#[derive(Debug, Clone)]
pub struct SearchSpace {
    /// LUT rows to consider.
    pub rows: Vec<usize>,
    pub allow_local: bool,
    pub allow_offload: bool,
    /// Offload at this rate instead of optimizing it.
    pub fixed_rate: Option<f64>,
}

impl SearchSpace {
    pub fn full(ue: &UeConfig, force_offload: bool) -> Self {
        SearchSpace {
            rows: (0..ue.lut_len()).collect(),
            allow_local: !force_offload,
            allow_offload: true,
            fixed_rate: None,
        }
    }
}

fn keep_better(best: &mut Option<UeDecision>, cand: UeDecision) {
    if best.as_ref().is_none_or(|b| cand.cost < b.cost) {
        *best = Some(cand);
    }
}

/// Largest admissible rate for an offload at `(row, f_d)`: the backlog and link cap
/// further limited by the compressor throughput.
pub fn offload_rate_cap(k: usize, state: &SlotState, config: &Config, row: usize, f_d: f64) -> f64 {
    let ue = &config.fleet[k];
    let profile = &ue.lut[row];
    let r_max = channel::max_rate(&state.channels[k], ue);
    solvers::rate_cap(state.queues.q_ue[k], profile.du_bits(), config.tau(), r_max)
        .min(queueing::compress_rate_limit(profile, f_d))
}

/// Best offloading action at a fixed profile and clock.
fn best_offload_rate(
    k: usize,
    state: &SlotState,
    config: &Config,
    weights: UeWeights,
    row: usize,
    f_d: f64,
) -> Result<UeDecision> {
    let ue = &config.fleet[k];
    let tau = config.tau();
    let profile = &ue.lut[row];
    let q = &state.queues;
    let mu = ue.step_sizes.mu;
    let cap = offload_rate_cap(k, state, config, row, f_d);
    let weight_q = ue.lut_len() as f64
        * mu
        * mu
        * (q.q_ue[k] as f64 - q.p_hat[k][row] * q.q_es[k][row] as f64)
        + mu * q.z[k];
    let problem = RateProblem {
        weight_q,
        energy_coeff: weights.energy_coeff,
        w_bits: profile.du_bits(),
        bandwidth: ue.bandwidth(),
        gain_sq: state.channels[k].gain_sq,
        noise_psd: ue.channel.noise_psd,
        r_cap: cap,
        tau,
    };
    let r_star = solvers::optimal_rate(&problem);
    let eval = |rate: f64| {
        ue_cost(
            k,
            state,
            config,
            weights,
            &UeAction {
                offload: true,
                lut_index: row,
                rho: profile.rho,
                f_d,
                rate,
            },
        )
    };
    let mut best = eval(r_star)?;

    // Cost over the boundary rates is convex in the DU count: walk both ways
    // from the count reached by the stationary point.
    let n0 = best.service;
    let boundary = |n: u64| queueing::rate_for_offload(profile, f_d, n, tau).filter(|r| *r <= cap);
    let mut n = n0;
    let mut last = f64::INFINITY;
    while let Some(r) = boundary(n) {
        let d = eval(r)?;
        if d.cost < best.cost {
            best = d;
        }
        if d.cost > last || n == 0 {
            break;
        }
        last = d.cost;
        n -= 1;
    }
    let mut n = n0 + 1;
    let mut last = f64::INFINITY;
    while let Some(r) = boundary(n) {
        let d = eval(r)?;
        if d.cost < best.cost {
            best = d;
        }
        if d.cost > last {
            break;
        }
        last = d.cost;
        n += 1;
    }
    Ok(best)
}

/// Rejects states whose queue layout does not match the fleet.
fn check_shape(k: usize, state: &SlotState, config: &Config) -> Result<()> {
    let k_count = config.num_ues();
    let bank = &state.queues;
    if k >= k_count
        || state.channels.len() != k_count
        || bank.q_ue.len() != k_count
        || bank.q_es.len() != k_count
        || bank.q_es[k].len() != config.fleet[k].lut_len()
    {
        return Err(Error::Contract(format!(
            "slot state does not match the fleet (device {k} of {k_count})"
        )));
    }
    Ok(())
}

/// Exhaustive device search. Local candidates come first and offloading must
/// be strictly cheaper to win; within each branch earlier rows and slower
/// clocks win ties.
pub fn search_ue(
    k: usize,
    state: &SlotState,
    config: &Config,
    weights: UeWeights,
    space: &SearchSpace,
) -> Result<UeDecision> {
    check_shape(k, state, config)?;
    let ue = &config.fleet[k];
    let mut best: Option<UeDecision> = None;
    if space.allow_local {
        for &row in &space.rows {
            for &f_d in &ue.freq_set {
                let action = UeAction {
                    offload: false,
                    lut_index: row,
                    rho: ue.lut[row].rho,
                    f_d,
                    rate: 0.0,
                };
                keep_better(&mut best, ue_cost(k, state, config, weights, &action)?);
            }
        }
    }
    if space.allow_offload {
        let r_max = channel::max_rate(&state.channels[k], ue);
        for &row in &space.rows {
            for &f_d in &ue.freq_set {
                let cand = match space.fixed_rate {
                    None => best_offload_rate(k, state, config, weights, row, f_d)?,
                    Some(r_fix) => {
                        let rate = if state.queues.q_ue[k] == 0 {
                            0.0
                        } else {
                            r_fix
                        };
                        let limit = queueing::compress_rate_limit(&ue.lut[row], f_d);
                        if rate > r_max || rate > limit {
                            continue;
                        }
                        let action = UeAction {
                            offload: true,
                            lut_index: row,
                            rho: ue.lut[row].rho,
                            f_d,
                            rate,
                        };
                        ue_cost(k, state, config, weights, &action)?
                    }
                };
                keep_better(&mut best, cand);
            }
        }
    }
    match best {
        Some(b) => Ok(b),
        // Nothing admissible: process locally, which never needs the link.
        None => search_ue(
            k,
            state,
            config,
            weights,
            &SearchSpace {
                rows: space.rows.clone(),
                allow_local: true,
                allow_offload: false,
                fixed_rate: None,
            },
        ),
    }
}

pub fn meda_ue_step(k: usize, state: &SlotState, config: &Config) -> Result<UeDecision> {
    let space = SearchSpace::full(&config.fleet[k], config.sim.force_offload);
    search_ue(k, state, config, UeWeights::meda(k, state, config), &space)
}

pub fn made_ue_step(k: usize, state: &SlotState, config: &Config) -> Result<UeDecision> {
    let space = SearchSpace::full(&config.fleet[k], config.sim.force_offload);
    search_ue(k, state, config, UeWeights::made(k, state, config), &space)
}

/// Energy-minimizing step restricted to the first LUT row with `rho_fixed`.
pub fn fixed_accuracy_step(
    k: usize,
    state: &SlotState,
    config: &Config,
    rho_fixed: u32,
) -> Result<UeDecision> {
    let ue = &config.fleet[k];
    let row = ue
        .lut
        .iter()
        .position(|p| p.rho == rho_fixed)
        .ok_or_else(|| Error::Contract(format!("rho {rho_fixed} not in ue[{k}] LUT")))?;
    let space = SearchSpace {
        rows: vec![row],
        ..SearchSpace::full(ue, config.sim.force_offload)
    };
    search_ue(k, state, config, UeWeights::meda(k, state, config), &space)
}

/// Energy-minimizing step that always offloads at `rate` and only picks the
/// profile and clock. Falls back to local processing when the channel or the
/// compressor cannot carry `rate` this slot.
pub fn hybrid_fixed_rate_step(
    k: usize,
    state: &SlotState,
    config: &Config,
    rate: f64,
) -> Result<UeDecision> {
    let ue = &config.fleet[k];
    let space = SearchSpace {
        rows: (0..ue.lut_len()).collect(),
        allow_local: false,
        allow_offload: true,
        fixed_rate: Some(rate),
    };
    search_ue(k, state, config, UeWeights::meda(k, state, config), &space)
}

/// Smallest rate at which offloading every slot keeps up with the mean
/// arrivals while meeting the accuracy target on average.
///
/// The cheapest way to meet the target mixes at most two profiles; their mean
/// DU size and the slower setup time at top clock set the rate. The rate must
/// fit under the ergodic capacity of the Rayleigh link at full power.
pub fn min_stable_rate(ue: &UeConfig, tau: f64) -> Result<f64> {
    if ue.arrival_mean <= 0.0 {
        return Ok(0.0);
    }
    let f_max = ue.freq_set.iter().cloned().fold(0.0, f64::max);
    let target = ue.constraints.accuracy_avg;
    // (mean bits, rows in support)
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut consider = |bits: f64, support: Vec<usize>| {
        if best.as_ref().is_none_or(|(b, _)| bits < *b) {
            best = Some((bits, support));
        }
    };
    for (i, a) in ue.lut.iter().enumerate() {
        if a.accuracy >= target {
            consider(a.du_bits(), vec![i]);
            for (j, b) in ue.lut.iter().enumerate() {
                if b.accuracy < target {
                    let w = (target - b.accuracy) / (a.accuracy - b.accuracy);
                    consider(w * a.du_bits() + (1.0 - w) * b.du_bits(), vec![i, j]);
                }
            }
        }
    }
    let (bits, support) = match best {
        Some(b) => b,
        None => {
            let top = ue
                .lut
                .iter()
                .map(|p| p.accuracy)
                .fold(f64::NEG_INFINITY, f64::max);
            let (i, p) = ue
                .lut
                .iter()
                .enumerate()
                .filter(|(_, p)| p.accuracy == top)
                .min_by(|a, b| a.1.du_bits().total_cmp(&b.1.du_bits()))
                .expect("LUT is never empty");
            (p.du_bits(), vec![i])
        }
    };
    let setup = support
        .iter()
        .map(|&i| queueing::setup_time(&ue.lut[i], f_max))
        .fold(0.0, f64::max);
    let field = || format!("ue[{}]", ue.id);
    if setup >= tau {
        return Err(ConfigError::field(field(), "compression setup exceeds the slot").into());
    }
    let rate = ue.arrival_mean * bits / (tau - setup);
    let ergodic = channel::ergodic_capacity(
        ue.p_tx_max,
        ue.channel.pathloss_gain,
        ue.bandwidth(),
        ue.channel.noise_psd,
    );
    if rate > ergodic {
        return Err(ConfigError::field(
            field(),
            format!(
                "fixed rate {rate:.0} b/s needed for stability exceeds the ergodic capacity {ergodic:.0} b/s"
            ),
        )
        .into());
    }
    Ok(rate)
}

/// Server step shared by every policy: build one knapsack item per non-empty
/// queue and pick the clock.
fn es_step(state: &SlotState, config: &Config, maximize_accuracy: bool) -> EsDecision {
    let tau = config.tau();
    let q = &state.queues;
    let mut items = Vec::new();
    for (k, ue) in config.fleet.iter().enumerate() {
        let mu = ue.step_sizes.mu;
        let l = ue.lut_len() as f64;
        for (i, profile) in ue.lut.iter().enumerate() {
            let len = q.q_es[k][i];
            if len == 0 {
                continue;
            }
            let pressure = if maximize_accuracy {
                len as f64
            } else {
                l * mu * mu * len as f64 + mu * q.z[k]
            };
            items.push(KnapsackItem {
                key: (k, i),
                weight: pressure * profile.j_server,
                cap: len as f64 / (tau * profile.j_server),
            });
        }
    }
    let server = &config.server;
    let energy_weight = if maximize_accuracy {
        server.eta * q.o
    } else {
        config.sim.v * (1.0 - server.gamma)
    };
    let alloc = solvers::es_allocate(&items, &server.freq_set, energy_weight, tau, server.kappa);

    let mut f_split: Vec<Vec<f64>> = config
        .fleet
        .iter()
        .map(|u| vec![0.0; u.lut_len()])
        .collect();
    let mut service: Vec<Vec<u64>> = config.fleet.iter().map(|u| vec![0; u.lut_len()]).collect();
    for (item, f) in items.iter().zip(&alloc.allocation) {
        let (k, i) = item.key;
        f_split[k][i] = *f;
        service[k][i] = queueing::n_server(&config.fleet[k].lut[i], *f, tau);
    }
    EsDecision {
        energy: channel::comp_energy(alloc.f_s, server.kappa, tau),
        action: EsAction {
            f_s: alloc.f_s,
            f_split,
        },
        cost: alloc.cost,
        service,
    }
}

pub fn meda_es_step(state: &SlotState, config: &Config) -> EsDecision {
    es_step(state, config, false)
}

pub fn made_es_step(state: &SlotState, config: &Config) -> EsDecision {
    es_step(state, config, true)
}

/// A policy bound to a configuration, with anything it precomputes.
#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    hybrid_rates: Vec<f64>,
}

impl Policy {
    pub fn new(config: &Config) -> Result<Self> {
        let kind = config.sim.policy;
        let hybrid_rates = match kind {
            PolicyKind::HybridFixedRate => config
                .fleet
                .iter()
                .map(|ue| min_stable_rate(ue, config.tau()))
                .collect::<Result<_>>()?,
            _ => Vec::new(),
        };
        if let PolicyKind::FixedAccuracy { rho } = kind {
            for ue in &config.fleet {
                if !ue.lut.iter().any(|p| p.rho == rho) {
                    return Err(ConfigError::field(
                        "sim.policy",
                        format!("rho {rho} is not in the LUT of ue[{}]", ue.id),
                    )
                    .into());
                }
            }
        }
        Ok(Policy { kind, hybrid_rates })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    /// Pre-computed per-device rates of the fixed-rate baseline.
    pub fn hybrid_rates(&self) -> &[f64] {
        &self.hybrid_rates
    }

    pub fn ue_step(&self, k: usize, state: &SlotState, config: &Config) -> Result<UeDecision> {
        match self.kind {
            PolicyKind::MuMeda => meda_ue_step(k, state, config),
            PolicyKind::MuMade => made_ue_step(k, state, config),
            PolicyKind::FixedAccuracy { rho } => fixed_accuracy_step(k, state, config, rho),
            PolicyKind::HybridFixedRate => {
                hybrid_fixed_rate_step(k, state, config, self.hybrid_rates[k])
            }
        }
    }

    pub fn es_step(&self, state: &SlotState, config: &Config) -> EsDecision {
        es_step(state, config, self.kind.maximizes_accuracy())
    }

    pub fn decide(&self, state: &SlotState, config: &Config) -> Result<SlotDecision> {
        let ues = (0..config.num_ues())
            .map(|k| self.ue_step(k, state, config))
            .collect::<Result<_>>()?;
        Ok(SlotDecision {
            ues,
            es: self.es_step(state, config),
        })
    }
}

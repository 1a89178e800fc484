//! Test-side oracles. Everything here is written from the model formulas and
//! deliberately avoids calling the library routines it is used to check.

#![allow(dead_code)]

use goc_edge::channel::ChannelState;
use goc_edge::model::{CompressionProfile, Config};
use goc_edge::policies::SlotState;
use goc_edge::queueing::QueueBank;
use goc_edge::solvers::{KnapsackItem, RateProblem};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

pub const TAU: f64 = 0.05;

/// Same flooring convention as the library: counts land on an integer when
/// the product is within 1e-9 of it.
pub fn floor_count(x: f64) -> u64 {
    if x <= 0.0 || x.is_nan() {
        0
    } else {
        (x + 1e-9).floor() as u64
    }
}

pub fn w_bits(p: &CompressionProfile) -> f64 {
    p.pixels as f64 * p.bits_per_pixel
}

// ---------------------------------------------------------------- rate

/// Difference `f(x) - f(y)` of the relaxed per-slot cost
/// `-tau q R / W + c tau B N0 / g (2^{R/B} - 1)`, without forming the two
/// large, nearly equal costs.
pub fn relaxed_rate_cost_diff(p: &RateProblem, x: f64, y: f64) -> f64 {
    let scale = p.tau * p.bandwidth * p.noise_psd / p.gain_sq;
    let grow = |from: f64, to: f64| {
        // 2^{to/B} - 2^{from/B} for from <= to; at from = 0 this is e_tx(to) up to scale.
        let base = 2f64.powf(from / p.bandwidth);
        base * ((to - from) / p.bandwidth * std::f64::consts::LN_2).exp_m1()
    };
    let energy = if x >= y { grow(y, x) } else { -grow(x, y) };
    -p.tau * p.weight_q * (x - y) / p.w_bits + p.energy_coeff * scale * energy
}

/// Golden-section search driven by a difference `diff(x, y) = f(x) - f(y)`,
/// for objectives whose values are too large to compare directly.
pub fn golden_section_by(diff: impl Fn(f64, f64) -> f64, lo: f64, hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    for _ in 0..200 {
        if b - a <= 1e-12 * hi.abs().max(1.0) {
            break;
        }
        if diff(c, d) < 0.0 {
            b = d;
            d = c;
            c = b - inv_phi * (b - a);
        } else {
            a = c;
            c = d;
            d = a + inv_phi * (b - a);
        }
    }
    // The interior search never returns the end points; check them too.
    let mut best = 0.5 * (a + b);
    for x in [lo, hi] {
        if diff(x, best) < 0.0 {
            best = x;
        }
    }
    best
}

pub fn random_rate_problem<R: Rng>(rng: &mut R) -> RateProblem {
    let lut = goc_edge::model::lut::deep_and_short();
    let row = &lut[rng.random_range(0..lut.len())];
    let log_uniform = |rng: &mut R, lo: f64, hi: f64| 10f64.powf(rng.random_range(lo..hi));
    let weight_q = if rng.random_bool(0.1) {
        -log_uniform(rng, -2.0, 4.0)
    } else {
        log_uniform(rng, -2.0, 6.0)
    };
    let mut p = RateProblem {
        weight_q,
        energy_coeff: log_uniform(rng, -2.0, 9.0),
        w_bits: w_bits(row),
        bandwidth: 2.5e6,
        gain_sq: log_uniform(rng, -16.0, -9.0),
        noise_psd: goc_edge::model::THERMAL_NOISE_PSD,
        r_cap: log_uniform(rng, 3.0, 7.7),
        tau: TAU,
    };
    if rng.random_bool(0.05) {
        p.energy_coeff = 0.0;
    } else if weight_q > 0.0 && rng.random_bool(0.5) {
        // Price energy so the unconstrained optimum lands near a chosen rate,
        // mostly inside the feasible interval.
        let target = rng.random_range(0.0..1.2) * p.r_cap;
        let slope = p.tau * weight_q / p.w_bits;
        let unit = p.tau * p.noise_psd * std::f64::consts::LN_2 / p.gain_sq
            * 2f64.powf(target / p.bandwidth);
        p.energy_coeff = slope / unit;
    }
    p
}

// ---------------------------------------------------------------- server

/// Best vertex of `max sum w x` s.t. `0 <= x <= cap`, `sum x <= budget`,
/// enumerating every subset at its cap plus at most one partial item.
/// Returns `(value, allocation, unique)`.
pub fn knapsack_vertices(items: &[(f64, f64)], budget: f64) -> (f64, Vec<f64>, bool) {
    let n = items.len();
    assert!(n <= 16, "vertex enumeration is exponential");
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let mut runner_up = f64::NEG_INFINITY;
    let mut offer = |value: f64, x: Vec<f64>, best: &mut (f64, Vec<f64>)| {
        if value > best.0 {
            runner_up = best.0;
            *best = (value, x);
        } else if value > runner_up && x != best.1 {
            runner_up = value;
        }
    };
    for mask in 0u32..(1 << n) {
        let mut used = 0.0;
        let mut value = 0.0;
        let mut x = vec![0.0; n];
        for j in 0..n {
            if mask & (1 << j) != 0 {
                x[j] = items[j].1;
                used += items[j].1;
                value += items[j].0 * items[j].1;
            }
        }
        if used > budget * (1.0 + 1e-12) {
            continue;
        }
        offer(value, x.clone(), &mut best);
        let left = budget - used;
        for j in 0..n {
            if mask & (1 << j) == 0 && left > 0.0 && left < items[j].1 {
                let mut y = x.clone();
                y[j] = left;
                offer(value + items[j].0 * left, y, &mut best);
            }
        }
    }
    let scale = best.0.abs().max(1e-300);
    let unique = best.0 - runner_up > 1e-9 * scale;
    (best.0, best.1, unique)
}

/// Dual bound `min_lambda lambda B + sum cap max(0, w - lambda)` over the
/// breakpoints `lambda in {0} u {w_j}`; equals the LP optimum.
pub fn knapsack_dual(items: &[(f64, f64)], budget: f64) -> f64 {
    std::iter::once(0.0)
        .chain(items.iter().map(|it| it.0.max(0.0)))
        .map(|lam| {
            lam * budget
                + items
                    .iter()
                    .map(|(w, c)| c * (w - lam).max(0.0))
                    .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Server items built from the queue state, test-side.
pub fn server_items(
    state: &SlotState,
    config: &Config,
    maximize_accuracy: bool,
) -> Vec<KnapsackItem> {
    let mut items = Vec::new();
    for (k, ue) in config.fleet.iter().enumerate() {
        let mu = ue.step_sizes.mu;
        for (i, p) in ue.lut.iter().enumerate() {
            let q = state.queues.q_es[k][i] as f64;
            if q == 0.0 {
                continue;
            }
            let pressure = if maximize_accuracy {
                q
            } else {
                ue.lut.len() as f64 * mu * mu * q + mu * state.queues.z[k]
            };
            items.push(KnapsackItem {
                key: (k, i),
                weight: pressure * p.j_server,
                cap: q / (TAU * p.j_server),
            });
        }
    }
    items
}

/// Exhaustive server oracle: every `f_s` times every LP vertex.
/// Returns `(f_s, allocation, cost, unique)`.
pub fn server_oracle(
    items: &[KnapsackItem],
    freq_set: &[f64],
    energy_weight: f64,
    kappa: f64,
) -> (f64, Vec<f64>, f64, bool) {
    let mut all: Vec<(f64, Vec<f64>, f64, bool)> = freq_set
        .iter()
        .map(|&f_s| {
            let clipped: Vec<(f64, f64)> = items
                .iter()
                .map(|it| (it.weight, it.cap.min(f_s)))
                .collect();
            let (value, x, unique) = knapsack_vertices(&clipped, f_s);
            let dual = knapsack_dual(&clipped, f_s);
            assert!(
                (dual - value).abs() <= 1e-9 * value.abs().max(1e-300),
                "vertex enumeration {value} disagrees with the dual {dual}"
            );
            let cost = -TAU * value + TAU * energy_weight * kappa * f_s.powi(3);
            (f_s, x, cost, unique)
        })
        .collect();
    all.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.total_cmp(&b.0)));
    let scale = all[0].2.abs().max(1e-300);
    let unique_fs = all.len() == 1 || all[1].2 - all[0].2 > 1e-9 * scale;
    let (f_s, x, cost, unique_x) = all.swap_remove(0);
    (f_s, x, cost, unique_fs && unique_x)
}

// ---------------------------------------------------------------- device

/// Price of energy and of accuracy in the device cost.
#[derive(Debug, Clone, Copy)]
pub struct Prices {
    pub energy: f64,
    pub accuracy: f64,
}

pub fn meda_prices(k: usize, state: &SlotState, config: &Config) -> Prices {
    let ue = &config.fleet[k];
    Prices {
        energy: config.sim.v * config.server.gamma * ue.delta,
        accuracy: ue.step_sizes.nu * state.queues.y[k],
    }
}

pub fn made_prices(k: usize, state: &SlotState, config: &Config) -> Prices {
    let ue = &config.fleet[k];
    Prices {
        energy: ue.step_sizes.lambda * state.queues.s[k],
        accuracy: config.sim.v,
    }
}

/// Test-side evaluation of one device action.
#[allow(clippy::too_many_arguments)]
pub fn device_cost(
    k: usize,
    state: &SlotState,
    config: &Config,
    prices: Prices,
    offload: bool,
    row: usize,
    f_d: f64,
    rate: f64,
) -> f64 {
    let ue = &config.fleet[k];
    let p = &ue.lut[row];
    let q = &state.queues;
    let service = if offload {
        if rate == 0.0 {
            0
        } else {
            floor_count((TAU - 1.0 / (f_d * p.j_offload)) * rate / w_bits(p))
        }
    } else {
        floor_count(TAU * f_d * p.j_local)
    };
    let n = service.min(q.q_ue[k]) as f64;
    let g = state.channels[k].gain_sq;
    let b = ue.channel.bandwidth_hz;
    let e_tx = if rate == 0.0 {
        0.0
    } else {
        TAU * b * ue.channel.noise_psd / g * (2f64.powf(rate / b) - 1.0)
    };
    let e_c = TAU * ue.kappa * f_d.powi(3);
    let mu = ue.step_sizes.mu;
    let l = ue.lut.len() as f64;
    let q_ue = q.q_ue[k] as f64;
    let es = if offload {
        q.p_hat[k][row] * q.q_es[k][row] as f64
    } else {
        0.0
    };
    l * mu * mu * n * (es - q_ue) + mu * q.z[k] * (q_ue - n) - prices.accuracy * p.accuracy
        + prices.energy * (e_tx + e_c)
}

/// Largest rate the device may use at `(row, f_d)`.
pub fn rate_limit(k: usize, state: &SlotState, config: &Config, row: usize, f_d: f64) -> f64 {
    let ue = &config.fleet[k];
    let p = &ue.lut[row];
    let b = ue.channel.bandwidth_hz;
    let g = state.channels[k].gain_sq;
    let r_max = b * (1.0 + ue.p_tx_max * g / (ue.channel.noise_psd * b)).log2();
    let backlog = state.queues.q_ue[k] as f64 * w_bits(p) / TAU;
    backlog
        .min(r_max)
        .min(w_bits(p) * f_d * p.j_offload)
        .max(0.0)
}

/// Brute-force device decision: `(offload, row, f_d, rate, cost)`.
///
/// Offloading rates are a uniform grid of `grid` points on `[0, limit]` plus
/// every rate `n W / (tau - setup)` below the limit, which makes the minimum
/// exact because the cost is piecewise increasing in the rate between those
/// points.
pub fn brute_force_device(
    k: usize,
    state: &SlotState,
    config: &Config,
    prices: Prices,
    grid: usize,
) -> (bool, usize, f64, f64, f64) {
    let ue = &config.fleet[k];
    let mut best = (false, 0, 0.0, 0.0, f64::INFINITY);
    if !config.sim.force_offload {
        for row in 0..ue.lut.len() {
            for &f in &ue.freq_set {
                let c = device_cost(k, state, config, prices, false, row, f, 0.0);
                if c < best.4 {
                    best = (false, row, f, 0.0, c);
                }
            }
        }
    }
    for row in 0..ue.lut.len() {
        let p = &ue.lut[row];
        for &f in &ue.freq_set {
            let limit = rate_limit(k, state, config, row, f);
            let mut rates: Vec<f64> = (0..=grid).map(|i| limit * i as f64 / grid as f64).collect();
            let air = TAU - 1.0 / (f * p.j_offload);
            if air > 0.0 {
                let mut n = 1u64;
                loop {
                    let r = n as f64 * w_bits(p) / air;
                    if r > limit {
                        break;
                    }
                    rates.push(r);
                    n += 1;
                }
            }
            for r in rates {
                let c = device_cost(k, state, config, prices, true, row, f, r);
                if c < best.4 {
                    best = (true, row, f, r, c);
                }
            }
        }
    }
    best
}

// ---------------------------------------------------------------- states

/// Random queue bank and channel draw compatible with `config`.
pub fn random_state<R: Rng>(rng: &mut R, config: &Config) -> SlotState {
    let mut bank = QueueBank::new(&config.fleet);
    let channels = config
        .fleet
        .iter()
        .enumerate()
        .map(|(k, ue)| {
            bank.q_ue[k] = if rng.random_bool(0.1) {
                0
            } else {
                rng.random_range(0..40)
            };
            for q in bank.q_es[k].iter_mut() {
                *q = if rng.random_bool(0.5) {
                    0
                } else {
                    rng.random_range(0..60)
                };
            }
            let raw: Vec<f64> = (0..ue.lut.len()).map(|_| rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            bank.p_hat[k] = raw.iter().map(|x| x / total).collect();
            bank.z[k] = 10f64.powf(rng.random_range(-1.0..3.5));
            bank.y[k] = 10f64.powf(rng.random_range(-2.0..2.0));
            bank.s[k] = 10f64.powf(rng.random_range(-2.0..2.0));
            let unit: f64 = Exp1.sample(rng);
            let gain_sq = if rng.random_bool(0.03) {
                0.0
            } else {
                ue.channel.pathloss_gain * unit
            };
            ChannelState { gain_sq, slot: 0 }
        })
        .collect();
    bank.o = rng.random_range(0.0..50.0);
    SlotState {
        slot: 0,
        channels,
        queues: bank,
    }
}

// ---------------------------------------------------------------- misc

/// Bessel function of the first kind, order zero, by its power series.
pub fn bessel_j0(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..60 {
        term *= -(x * x / 4.0) / (m as f64 * m as f64);
        sum += term;
    }
    sum
}

/// Largest relative increase between adjacent points.
pub fn worst_increase(xs: &[f64]) -> f64 {
    xs.windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(1e-12))
        .fold(f64::NEG_INFINITY, f64::max)
}

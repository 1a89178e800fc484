//! Optimization kernels shared by the policies: the closed-form rate for a
//! fixed profile and clock, and the greedy fractional knapsack that splits the
//! server clock across its queues.

use std::cmp::Ordering;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

/// Per-slot rate subproblem for one device at a fixed profile and clock:
/// minimize `-tau * weight_q * R / w_bits + energy_coeff * E_tx(R)` over
/// `0 <= R <= r_cap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateProblem {
    /// Backlog pressure multiplying the DUs shipped.
    pub weight_q: f64,
    /// Price of one joule of transmit energy.
    pub energy_coeff: f64,
    pub w_bits: f64,
    pub bandwidth: f64,
    pub gain_sq: f64,
    pub noise_psd: f64,
    pub r_cap: f64,
    pub tau: f64,
}

/// Rate that drains the device queue, capped by what the link supports.
pub fn rate_cap(q_ue: u64, w_bits: f64, tau: f64, r_max: f64) -> f64 {
    (q_ue as f64 * w_bits / tau).min(r_max).max(0.0)
}

/// Relaxed objective of a [`RateProblem`] (floors dropped).
pub fn rate_objective(p: &RateProblem, rate: f64) -> f64 {
    let energy = if rate <= 0.0 {
        0.0
    } else if p.gain_sq <= 0.0 {
        f64::INFINITY
    } else {
        p.tau * p.bandwidth * p.noise_psd / p.gain_sq * (rate * LN_2 / p.bandwidth).exp_m1()
    };
    -p.tau * p.weight_q * rate / p.w_bits + p.energy_coeff * energy
}

/// Stationary point of the relaxed objective, projected on `[0, r_cap]`.
pub fn optimal_rate(p: &RateProblem) -> f64 {
    if p.weight_q <= 0.0 || p.r_cap <= 0.0 || p.gain_sq <= 0.0 {
        return 0.0;
    }
    if p.energy_coeff <= 0.0 {
        return p.r_cap;
    }
    let arg = p.weight_q * p.gain_sq / (p.w_bits * p.energy_coeff * LN_2 * p.noise_psd);
    let r = p.bandwidth / LN_2 * arg.ln();
    if r.is_nan() {
        return 0.0;
    }
    r.clamp(0.0, p.r_cap)
}

/// One server queue in the clock-splitting problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnapsackItem {
    /// `(device, profile index)`.
    pub key: (usize, usize),
    /// Value per Hz granted.
    pub weight: f64,
    /// Largest useful grant, Hz.
    pub cap: f64,
}

/// Fills the budget in decreasing weight order (ties by key). The result is
/// aligned with `items`. Items with non-positive weight get nothing.
pub fn knapsack_greedy(items: &[KnapsackItem], budget: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        items[b]
            .weight
            .partial_cmp(&items[a].weight)
            .unwrap_or(Ordering::Equal)
            .then(items[a].key.cmp(&items[b].key))
    });
    let mut alloc = vec![0.0; items.len()];
    let mut left = budget.max(0.0);
    for idx in order {
        let item = &items[idx];
        if item.weight <= 0.0 || left <= 0.0 {
            continue;
        }
        let grant = item.cap.max(0.0).min(left);
        alloc[idx] = grant;
        left -= grant;
    }
    alloc
}

/// `sum_j weight_j * alloc_j`.
pub fn knapsack_value(items: &[KnapsackItem], alloc: &[f64]) -> f64 {
    items.iter().zip(alloc).map(|(it, a)| it.weight * a).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsAllocation {
    pub f_s: f64,
    /// Aligned with the input items.
    pub allocation: Vec<f64>,
    pub cost: f64,
}

/// Picks the server clock and its split: for every `f_s` the knapsack is
/// solved with budget `f_s` (item caps clipped to `f_s`) and the cheapest
/// `-tau * value + tau * energy_weight * kappa * f_s^3` wins, smaller `f_s`
/// on ties.
pub fn es_allocate(
    items: &[KnapsackItem],
    freq_set: &[f64],
    energy_weight: f64,
    tau: f64,
    kappa: f64,
) -> EsAllocation {
    let mut best: Option<EsAllocation> = None;
    let mut sorted = freq_set.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    for f_s in sorted {
        let clipped: Vec<KnapsackItem> = items
            .iter()
            .map(|it| KnapsackItem {
                cap: it.cap.min(f_s),
                ..*it
            })
            .collect();
        let allocation = knapsack_greedy(&clipped, f_s);
        let cost = -tau * knapsack_value(&clipped, &allocation)
            + tau * energy_weight * kappa * f_s * f_s * f_s;
        if best.as_ref().is_none_or(|b| cost < b.cost) {
            best = Some(EsAllocation {
                f_s,
                allocation,
                cost,
            });
        }
    }
    best.expect("server frequency set is never empty")
}

//! Closed-form transmission rate versus the energy price.

use goc_edge::model::THERMAL_NOISE_PSD;
use goc_edge::solvers::{optimal_rate, rate_objective, RateProblem};

fn main() {
    let base = RateProblem {
        weight_q: 40.0,
        energy_coeff: 0.0,
        w_bits: 32.0 * 32.0 * 3.0 * 4.72,
        bandwidth: 2.5e6,
        gain_sq: 2.72e-14,
        noise_psd: THERMAL_NOISE_PSD,
        r_cap: 4e6,
        tau: 0.05,
    };
    println!(
        "{:>12} {:>12} {:>14}",
        "energy price", "rate Mb/s", "objective"
    );
    for price in [0.0, 1e2, 1e3, 1e4, 1e5, 1e6] {
        let p = RateProblem {
            energy_coeff: price,
            ..base
        };
        let r = optimal_rate(&p);
        println!(
            "{price:>12.0e} {:>12.4} {:>14.6}",
            r / 1e6,
            rate_objective(&p, r)
        );
    }
}

//! Splitting the server clock across per-profile queues.

use goc_edge::experiments::server_freqs;
use goc_edge::model::KAPPA_REF;
use goc_edge::solvers::{es_allocate, KnapsackItem};

fn main() {
    let tau = 0.05;
    // (device, profile, backlog weight, DU/cycle, queued DUs)
    let queues = [
        (0, 2, 30.0, 2.87e-7, 12.0),
        (1, 0, 55.0, 1.2e-7, 4.0),
        (1, 3, 10.0, 3.57e-7, 40.0),
        (2, 5, 80.0, 6.25e-7, 9.0),
    ];
    let items: Vec<KnapsackItem> = queues
        .iter()
        .map(|&(k, i, q, j, n)| KnapsackItem {
            key: (k, i),
            weight: q * j,
            cap: n / (tau * j),
        })
        .collect();
    for energy_weight in [0.0, 1e4, 1e6, 1e8] {
        let a = es_allocate(&items, &server_freqs(), energy_weight, tau, KAPPA_REF);
        let split: Vec<String> = items
            .iter()
            .zip(&a.allocation)
            .map(|(it, f)| format!("{:?}:{:.2}", it.key, f / 1e9))
            .collect();
        println!(
            "energy weight {energy_weight:>7.0e}: f_s = {:.2} GHz, split (GHz) {}",
            a.f_s / 1e9,
            split.join(" ")
        );
    }
}

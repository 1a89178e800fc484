//! Accuracy maximization under a per-device energy budget.
//!
//! cargo run --release --example made_budget -- [V] [horizon]

use goc_edge::engine;
use goc_edge::experiments::{made_k3, K3_DEVICES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let v: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1e5);
    let horizon: u64 = args
        .next()
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(20_000);
    let mut c = made_k3(v);
    c.sim.horizon = horizon;
    c.sim.warmup = horizon / 4;
    let s = engine::run(&c)?;
    for (k, u) in s.ues.iter().enumerate() {
        let (ch, mult) = K3_DEVICES[k];
        println!(
            "ue{k} (channel {ch}, {mult}x kappa): accuracy {:.4}, energy {:.2} mJ (budget {:.0}), delay {:.4} s, offload {:.1}%",
            u.accuracy,
            u.energy * 1e3,
            c.fleet[k].constraints.energy_avg * 1e3,
            u.delay,
            u.offload_frac * 100.0
        );
    }
    println!("largest virtual queue rate: {:.4}/slot", s.max_virtual_rate);
    Ok(())
}

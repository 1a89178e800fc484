//! Opportunistic offloading against always offloading on mixed channels.
//!
//! cargo run --release --example opportunistic -- [V] [horizon]

use goc_edge::engine;
use goc_edge::experiments::{mixed_channel_tag, opportunistic};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let v: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1e6);
    let horizon: u64 = args
        .next()
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(20_000);
    let mut runs = Vec::new();
    for force in [false, true] {
        let mut c = opportunistic(0.7, force, v);
        c.sim.horizon = horizon;
        c.sim.warmup = horizon / 4;
        runs.push(engine::run(&c)?);
    }
    println!("V = {v:e}");
    println!(
        "{:>4} {:>4} {:>16} {:>14} {:>10}",
        "ue", "ch", "opportunistic mJ", "offload-only mJ", "offload %"
    );
    for k in 0..runs[0].ues.len() {
        println!(
            "{k:>4} {:>4} {:>16.3} {:>14.3} {:>10.1}",
            mixed_channel_tag(k),
            runs[0].ues[k].energy * 1e3,
            runs[1].ues[k].energy * 1e3,
            runs[0].ues[k].offload_frac * 100.0
        );
    }
    Ok(())
}

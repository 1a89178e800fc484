//! Energy/delay trade-off over V, written as a summary CSV.
//!
//! cargo run --release --example v_sweep -- [horizon]

use goc_edge::engine;
use goc_edge::experiments::{channel_b_offload, default_v_grid};
use goc_edge::io::{read_summaries, write_summaries};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let horizon: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(20_000);
    let mut config = channel_b_offload(0.7, "short_ce", 0.0)?;
    config.sim.horizon = horizon;
    config.sim.warmup = horizon / 4;

    let runs = engine::sweep(&config, &default_v_grid())?;
    println!(
        "{:>8} {:>12} {:>10} {:>9}",
        "V", "energy mJ", "delay s", "accuracy"
    );
    for s in &runs {
        println!(
            "{:>8.1e} {:>12.3} {:>10.4} {:>9.4}",
            s.v,
            s.mean_ue_energy() * 1e3,
            s.mean_delay(),
            s.mean_accuracy()
        );
    }
    let path = std::env::temp_dir().join("goc_edge_sweep.csv");
    write_summaries(&path, &runs)?;
    println!(
        "{} rows -> {}",
        read_summaries(&path)?.len(),
        path.display()
    );
    Ok(())
}

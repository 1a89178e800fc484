//! Load a TOML scenario, inspect it, and write the expanded form back out.
//!
//! cargo run --example config_roundtrip -- configs/channel_b.toml

use std::path::PathBuf;

use goc_edge::model::{load_config, load_config_file};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/channel_b.toml")
        });
    let config = load_config_file(&path)?;
    println!(
        "{}: {} devices, policy {}, V = {:e}, horizon {} (warmup {})",
        path.display(),
        config.num_ues(),
        config.sim.policy.name(),
        config.sim.v,
        config.sim.horizon,
        config.sim.warmup
    );
    for ue in &config.fleet {
        println!(
            "  ue{}: {} LUT rows, {} clock levels, channel {} m, Q_avg = {:.1} DU",
            ue.id,
            ue.lut_len(),
            ue.freq_set.len(),
            ue.channel.distance_m,
            ue.queue_avg(config.tau())
        );
    }

    let expanded = config.to_toml();
    let again = load_config(&expanded)?;
    assert_eq!(again, config);
    println!(
        "expanded document: {} bytes, reloads identically",
        expanded.len()
    );
    Ok(())
}

//! One simulation with its slot log, then the constraint verdicts.
//!
//! cargo run --release --example single_run -- [horizon]

use goc_edge::cli::print_verdicts;
use goc_edge::engine;
use goc_edge::experiments::channel_b_offload;
use goc_edge::io::{read_slot_log, SlotLogWriter};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let horizon: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(20_000);
    let mut config = channel_b_offload(0.8, "deep_ce", 1e6)?;
    config.sim.horizon = horizon;
    config.sim.warmup = horizon / 4;

    let path = std::env::temp_dir().join("goc_edge_single_run.jsonl");
    let mut log = SlotLogWriter::create(&path)?;
    let summary = engine::run_with(&config, |r| log.write(r))?;
    log.finish()?;

    print_verdicts(&config, &summary);
    println!(
        "arrived {} DU, classified {}, left in queues {}; drift-bound violations {}",
        summary.arrivals_total,
        summary.classified_total,
        summary.backlog_end,
        summary.drift_violations
    );
    let records = read_slot_log(&path)?;
    let last = records.last().expect("non-empty run");
    println!(
        "{} records in {}; last slot: Z0 = {:.1}, Y0 = {:.1}, E_tot = {:.3} mJ",
        records.len(),
        path.display(),
        last.ues[0].z,
        last.ues[0].y_or_s,
        last.e_tot * 1e3
    );
    Ok(())
}

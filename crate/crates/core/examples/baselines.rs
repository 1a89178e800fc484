//! Dynamic control against the fixed-profile and fixed-rate baselines.
//!
//! cargo run --release --example baselines -- [horizon]

use goc_edge::engine;
use goc_edge::experiments::baselines_k3;
use goc_edge::policies::min_stable_rate;
use goc_edge::PolicyKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let horizon: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(20_000);
    let probe = baselines_k3(PolicyKind::HybridFixedRate);
    for ue in &probe.fleet {
        println!(
            "ue{} fixed rate: {:.3} Mb/s",
            ue.id,
            min_stable_rate(ue, probe.tau())? / 1e6
        );
    }
    for policy in [
        PolicyKind::MuMeda,
        PolicyKind::FixedAccuracy { rho: 8 },
        PolicyKind::HybridFixedRate,
    ] {
        let mut c = baselines_k3(policy);
        c.sim.horizon = horizon;
        c.sim.warmup = horizon / 4;
        let s = engine::run(&c)?;
        let per_ue: Vec<String> = s
            .ues
            .iter()
            .map(|u| format!("{:.2}", u.energy * 1e3))
            .collect();
        println!(
            "{:<22} energy mJ [{}], accuracy {:.4}, delay {:.4} s",
            s.policy,
            per_ue.join(", "),
            s.mean_accuracy(),
            s.mean_delay()
        );
    }
    Ok(())
}

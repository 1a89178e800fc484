//! Run a named experiment bundle into a temporary directory.
//!
//! cargo run --release --example experiment_bundle -- made_k3 [horizon]

use goc_edge::experiments::{run_bundle, BundleOptions, EXPERIMENTS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "made_k3".to_string());
    let horizon: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4_000);
    if !EXPERIMENTS.contains(&name.as_str()) {
        eprintln!("unknown bundle `{name}`; known: {}", EXPERIMENTS.join(", "));
        std::process::exit(2);
    }
    let out = std::env::temp_dir().join(format!("goc_edge_{name}"));
    let opts = BundleOptions {
        horizon: Some(horizon),
        v_grid: Some(vec![1e3, 1e5, 1e7]),
        ..Default::default()
    };
    let result = run_bundle(&name, &opts, &out)?;
    for f in &result.files {
        println!("wrote {}", f.display());
    }
    println!("{} summaries", result.summaries.len());
    Ok(())
}

//! Command-line front end behind the `goc-edge` binary.
//!
//! Every invocation writes into a fresh directory `<out>/<command>-<timestamp>`
//! holding `config.toml` (after overrides), the summary CSV, the slot log for
//! `run`, and `manifest.json`. Exit codes: 0 success, 1 runtime failure,
//! 2 invalid configuration or arguments.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::engine::{self, RunSummary};
use crate::error::{ConfigError, Error, Result};
use crate::experiments::{self, BundleOptions};
use crate::io::{self, SlotLogWriter};
use crate::model::{load_config_file, Config, PolicyKind};

/// Environment variable holding the default output root.
pub const OUT_ENV: &str = "GOC_EDGE_OUT";
/// Stability tolerance used in the printed verdicts.
pub const STABILITY_TOL: f64 = 1e-2;

#[derive(Debug, Parser)]
#[command(
    name = "goc-edge",
    version,
    about = "Goal-oriented edge offloading simulator"
)]
pub struct Cli {
    /// Output root; each invocation creates a timestamped directory inside it.
    #[arg(long, global = true, env = OUT_ENV, default_value = "runs")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration and write its summary and slot log.
    Run {
        #[command(flatten)]
        common: RunArgs,
        /// Trade-off parameter V.
        #[arg(long)]
        v: Option<f64>,
    },
    /// Run one configuration over a list of V values.
    Sweep {
        #[command(flatten)]
        common: RunArgs,
        /// `lo:hi:Nlog`, `lo:hi:N` or a comma list; empty for the default grid.
        #[arg(long, default_value = "")]
        v: String,
    },
    /// Run a named experiment bundle.
    Paper {
        #[arg(long)]
        experiment: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        warmup: Option<u64>,
        /// Replaces the default V grid of the bundle's sweeps.
        #[arg(long)]
        v: Option<String>,
    },
    /// Check a configuration file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `mu_meda`, `mu_made`, `hybrid_fixed_rate` or `fixed_accuracy:<rho>`.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub warmup: Option<u64>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: &'a str,
    command: &'a str,
    created: String,
    seed: Option<u64>,
    config: Option<String>,
    experiment: Option<&'a str>,
    files: Vec<String>,
}

/// Entry point of the binary: installs logging and runs `std::env::args`.
pub fn main() -> i32 {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .try_init();
    run_from(std::env::args_os())
}

/// Parses `args` (program name first) and executes the command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(dir) => {
            if let Some(dir) = dir {
                println!("output: {}", dir.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        _ => 1,
    }
}

/// Runs a parsed command. Returns the output directory, if one was written.
pub fn execute(cli: &Cli) -> Result<Option<PathBuf>> {
    match &cli.command {
        Command::Validate { config } => {
            let c = load_config_file(config)?;
            crate::policies::Policy::new(&c)?;
            println!(
                "{}: ok ({} devices, policy {})",
                config.display(),
                c.num_ues(),
                c.sim.policy.name()
            );
            Ok(None)
        }
        Command::Run { common, v } => {
            let mut c = configure(common)?;
            if let Some(v) = v {
                c.sim.v = checked_v(*v)?;
            }
            let dir = output_dir(&cli.out, "run")?;
            std::fs::write(dir.join("config.toml"), c.to_toml())?;
            let mut log = SlotLogWriter::create(&dir.join("slots.jsonl"))?;
            let summary = engine::run_with(&c, |r| log.write(r))?;
            log.finish()?;
            io::write_summaries(&dir.join("summary.csv"), std::slice::from_ref(&summary))?;
            print_verdicts(&c, &summary);
            write_manifest(
                &dir,
                "run",
                Some(c.sim.rng_seed),
                Some(&common.config),
                None,
            )?;
            Ok(Some(dir))
        }
        Command::Sweep { common, v } => {
            let c = configure(common)?;
            let grid = experiments::parse_v_spec(v)?;
            let dir = output_dir(&cli.out, "sweep")?;
            std::fs::write(dir.join("config.toml"), c.to_toml())?;
            let runs = engine::sweep(&c, &grid)?;
            io::write_summaries(&dir.join("summary.csv"), &runs)?;
            for s in &runs {
                print_verdicts(&c.with_v(s.v), s);
            }
            write_manifest(
                &dir,
                "sweep",
                Some(c.sim.rng_seed),
                Some(&common.config),
                None,
            )?;
            Ok(Some(dir))
        }
        Command::Paper {
            experiment,
            seed,
            horizon,
            warmup,
            v,
        } => {
            if !experiments::EXPERIMENTS.contains(&experiment.as_str()) {
                return Err(ConfigError::UnknownPreset {
                    kind: "experiment",
                    name: experiment.clone(),
                    known: experiments::EXPERIMENTS.join(", "),
                }
                .into());
            }
            let opts = BundleOptions {
                horizon: *horizon,
                warmup: *warmup,
                seed: *seed,
                v_grid: v.as_deref().map(experiments::parse_v_spec).transpose()?,
            };
            let dir = output_dir(&cli.out, experiment)?;
            let out = experiments::run_bundle(experiment, &opts, &dir)?;
            io::write_summaries(&dir.join("summary.csv"), &out.summaries)?;
            for s in &out.summaries {
                println!(
                    "{} V={:e}: mean energy {:.5} J, delay {:.4} s, accuracy {:.4}, max virtual rate {:.4}",
                    s.label,
                    s.v,
                    s.mean_ue_energy(),
                    s.mean_delay(),
                    s.mean_accuracy(),
                    s.max_virtual_rate
                );
            }
            write_manifest(&dir, "paper", *seed, None, Some(experiment))?;
            Ok(Some(dir))
        }
    }
}

fn checked_v(v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::field("v", format!("{v} must be finite and non-negative")).into())
    }
}

fn configure(args: &RunArgs) -> Result<Config> {
    let mut c = load_config_file(&args.config)?;
    if let Some(seed) = args.seed {
        c.sim.rng_seed = seed;
    }
    if let Some(p) = &args.policy {
        c.sim.policy = PolicyKind::parse(p).ok_or_else(|| {
            ConfigError::field(
                "policy",
                format!(
                    "`{p}` (expected mu_meda, mu_made, hybrid_fixed_rate or fixed_accuracy:<rho>)"
                ),
            )
        })?;
    }
    if let Some(h) = args.horizon {
        c.sim.horizon = h;
        if args.warmup.is_none() {
            c.sim.warmup = h / 4;
        }
    }
    if let Some(w) = args.warmup {
        c.sim.warmup = w;
    }
    if c.sim.warmup >= c.sim.horizon {
        return Err(ConfigError::field(
            "warmup",
            format!(
                "{} must be below the horizon {}",
                c.sim.warmup, c.sim.horizon
            ),
        )
        .into());
    }
    Ok(c)
}

/// Creates `<root>/<tag>-<timestamp>`, adding a counter on collisions.
fn output_dir(root: &Path, tag: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(root)?;
    let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S");
    let base = format!("{tag}-{stamp}");
    let mut n = 0;
    loop {
        let name = if n == 0 {
            base.clone()
        } else {
            format!("{base}-{n}")
        };
        let dir = root.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => n += 1,
            Err(e) => return Err(e.into()),
        }
    }
}

fn write_manifest(
    dir: &Path,
    command: &str,
    seed: Option<u64>,
    config: Option<&Path>,
    experiment: Option<&str>,
) -> Result<()> {
    let mut files: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    files.sort();
    let m = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        command,
        created: chrono::Local::now().to_rfc3339(),
        seed,
        config: config.map(|p| p.display().to_string()),
        experiment,
        files,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Prints one line per constraint of every device, plus queue stability.
pub fn print_verdicts(config: &Config, s: &RunSummary) {
    println!("{} V={:e}", s.policy, s.v);
    for (k, (ue, u)) in config.fleet.iter().zip(&s.ues).enumerate() {
        let d = &ue.constraints;
        println!(
            "  ue{k} delay {:.4} s <= {:.4} s: {}",
            u.delay,
            d.delay_avg,
            verdict(u.delay_slack >= 0.0)
        );
        if config.sim.policy.maximizes_accuracy() {
            if d.energy_avg.is_finite() {
                println!(
                    "  ue{k} energy {:.5} J <= {:.5} J: {}",
                    u.energy,
                    d.energy_avg,
                    verdict(u.energy_slack >= 0.0)
                );
            }
        } else {
            println!(
                "  ue{k} accuracy {:.4} >= {:.4}: {}",
                u.accuracy,
                d.accuracy_avg,
                verdict(u.accuracy_slack >= 0.0)
            );
        }
    }
    if config.sim.policy.maximizes_accuracy() && config.server.energy_avg.is_finite() {
        println!(
            "  server energy {:.5} J <= {:.5} J: {}",
            s.es_energy,
            config.server.energy_avg,
            verdict(s.es_energy_slack >= 0.0)
        );
    }
    println!(
        "  virtual queues {:.4}/slot < {STABILITY_TOL}: {}",
        s.max_virtual_rate,
        verdict(s.max_virtual_rate < STABILITY_TOL)
    );
}

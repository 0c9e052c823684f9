//! Monte-Carlo command line for the unsourced random access simulator.
//!
//! Subcommands: `sweep` (PUPE vs Eb/N0 or load), `converge` (BER per
//! estimator iteration under genie detection), `minEbN0` (bisection for the
//! smallest Eb/N0 meeting a PUPE target). All results are CSV on the given
//! output path or stdout.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ura_sim::config::SystemConfig;
use ura_sim::ldpc::ParityCheckMatrix;
use ura_sim::receiver::GenieFlags;
use ura_sim::sim::{self, SweepSpec, SweepVariable};

#[derive(Parser)]
#[command(name = "ura-sim", version, about = "Unsourced random access link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// TOML config file; missing keys fall back to the reference defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per point override.
    #[arg(long)]
    trials: Option<usize>,
    /// Number of active users override.
    #[arg(long)]
    ka: Option<usize>,
    /// Inject the true active set instead of running detection.
    #[arg(long = "genie-detect")]
    genie_detect: bool,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Debug: write per-iteration receiver diagnostics as CSV to this path.
    #[arg(long)]
    diag: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// PUPE/false-alarm aggregates over a grid of Eb/N0 or Ka values.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Swept variable.
        #[arg(long, value_parser = ["ebn0_db", "ka"], default_value = "ebn0_db")]
        var: String,
        /// Comma-separated strictly increasing values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// BER per estimator iteration under genie detection.
    Converge {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated strictly increasing Eb/N0 grid in dB.
        #[arg(long, value_delimiter = ',', required = true)]
        ebn0: Vec<f64>,
    },
    /// Smallest Eb/N0 meeting a PUPE target, by bisection to 0.1 dB.
    #[command(name = "minEbN0")]
    MinEbN0 {
        #[command(flatten)]
        common: CommonOpts,
        /// PUPE target.
        #[arg(long, default_value_t = 0.05)]
        target: f64,
        /// Lower bracket (dB).
        #[arg(long)]
        lo: f64,
        /// Upper bracket (dB).
        #[arg(long)]
        hi: f64,
    },
}

fn load_config(common: &CommonOpts) -> Result<SystemConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            SystemConfig::from_toml_str(&text)?
        }
        None => SystemConfig::defaults_for(25),
    };
    if let Some(ka) = common.ka {
        cfg.ka = ka;
        if cfg.detection.budget > ka || common.config.is_none() {
            cfg.detection.budget = ka;
        }
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn diag_writer(path: &Option<PathBuf>) -> Result<Option<BufWriter<File>>> {
    path.as_ref()
        .map(|p| {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            Ok(BufWriter::new(f))
        })
        .transpose()
}

fn main() -> Result<()> {
    env_logger::init();
    let cli = Cli::parse();
    let code = ParityCheckMatrix::shipped_264_88();
    match cli.command {
        Command::Sweep { common, var, values } => {
            let cfg = load_config(&common)?;
            let spec = SweepSpec {
                variable: match var.as_str() {
                    "ka" => SweepVariable::Ka,
                    _ => SweepVariable::Ebn0Db,
                },
                values,
                trials_per_point: cfg.trials,
            };
            let genie = GenieFlags { detect: common.genie_detect, verify: false };
            let mut out = open_out(&common.out)?;
            match diag_writer(&common.diag)? {
                Some(mut d) => {
                    sim::run_sweep_with_diag(&spec, &cfg, code, genie, &mut out, Some(&mut d))?;
                    d.flush()?;
                }
                None => {
                    sim::run_sweep(&spec, &cfg, code, genie, &mut out)?;
                }
            }
            out.flush()?;
        }
        Command::Converge { common, ebn0 } => {
            let cfg = load_config(&common)?;
            let mut out = open_out(&common.out)?;
            match diag_writer(&common.diag)? {
                Some(mut d) => {
                    sim::run_convergence_with_diag(&cfg, &ebn0, code, &mut out, Some(&mut d))?;
                    d.flush()?;
                }
                None => {
                    sim::run_convergence(&cfg, &ebn0, code, &mut out)?;
                }
            }
            out.flush()?;
        }
        Command::MinEbN0 { common, target, lo, hi } => {
            if !(0.0..=1.0).contains(&target) {
                bail!("target must be a probability in [0, 1]");
            }
            let cfg = load_config(&common)?;
            let db = sim::min_ebn0_search(&cfg, code, target, lo, hi, cfg.trials)?;
            let mut out = open_out(&common.out)?;
            writeln!(out, "# ura-sim minEbN0 {} seed={}", sim::CSV_SCHEMA, cfg.seed)?;
            writeln!(out, "ka,target_pupe,min_ebn0_db")?;
            writeln!(out, "{},{:.6},{:.4}", cfg.ka, target, db)?;
            out.flush()?;
        }
    }
    Ok(())
}

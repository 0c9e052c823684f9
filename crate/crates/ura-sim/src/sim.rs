//! Seeded Monte-Carlo harness: trial execution, parallel sweeps, the
//! convergence study, and CSV emission.
//!
//! Reproducibility contract: `(config, master seed)` determines every RNG
//! draw. Each (point, trial) pair derives its own seed through a splitmix
//! chain, and each trial derives separate substreams for the codebook, the
//! messages and the channel noise, so results are identical under any
//! degree of trial parallelism.

use std::io::{self, Write};
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::codebook::SignatureCodebook;
use crate::config::SystemConfig;
use crate::ldpc::ParityCheckMatrix;
use crate::metrics::{self, BracketError, TrialResult};
use crate::phy::{encode_user, transmit, UserMessage};
use crate::receiver::{GenieFlags, Receiver, TrialTruth};

/// CSV schema version written into the header comment of every output.
pub const CSV_SCHEMA: &str = "v1";

/// splitmix64 finalizer.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives an independent seed from a master seed and two index words.
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(domain)) ^ index)
}

/// Stable tag identifying a sweep point (load, operating point).
fn point_tag(ka: usize, ebn0_db: f64) -> u64 {
    splitmix64((ka as u64) ^ ebn0_db.to_bits().rotate_left(17))
}

/// Runs one trial: draw codebook, messages and noise from the trial seed,
/// run the receiver, and account the outcome.
pub fn run_trial(
    cfg: &SystemConfig,
    code: &ParityCheckMatrix,
    trial_seed: u64,
    genie: GenieFlags,
    track_ber: bool,
) -> TrialResult {
    run_trial_full(cfg, code, trial_seed, genie, track_ber).0
}

/// [`run_trial`] keeping the receiver diagnostics.
pub fn run_trial_full(
    cfg: &SystemConfig,
    code: &ParityCheckMatrix,
    trial_seed: u64,
    genie: GenieFlags,
    track_ber: bool,
) -> (TrialResult, crate::receiver::RunDiag) {
    let start = Instant::now();
    let codebook_seed = derive_seed(trial_seed, 1, 0);
    let message_seed = derive_seed(trial_seed, 2, 0);
    let noise_seed = derive_seed(trial_seed, 3, 0);

    let codebook = SignatureCodebook::generate(cfg.n_chips, cfg.codebook_size(), codebook_seed);
    let encoder = code.encoder().expect("channel code supports systematic encoding");
    let mut msg_rng = ChaCha8Rng::seed_from_u64(message_seed);
    let messages: Vec<UserMessage> = (0..cfg.ka)
        .map(|_| UserMessage::random(cfg.b_total, cfg.b_header, &mut msg_rng))
        .collect();
    let frames: Vec<_> = messages
        .iter()
        .map(|m| encode_user(m, &encoder, &cfg.power, cfg.codebook_size()))
        .collect();
    let y = transmit(&frames, &codebook, cfg.n_symbols, cfg.noise_variance(), noise_seed);
    let truth = TrialTruth::new(messages.clone(), frames);

    let mut receiver = Receiver::new(cfg, &codebook, code).with_genie(genie);
    let needs_truth = genie.detect || genie.verify || track_ber;
    let (recovered, diag) = receiver.run(&y, needs_truth.then_some(&truth));

    let result = TrialResult {
        sent: messages,
        recovered,
        per_iteration_ber: if track_ber {
            diag.ber_trace(cfg.max_ese_iters)
        } else {
            Vec::new()
        },
        sic_rounds: diag.rounds.len(),
        ese_iters: diag.total_ese_iters(),
        wall_time: start.elapsed().as_secs_f64(),
    };
    (result, diag)
}

/// Runs all trials of one point in parallel. Trial order in the returned
/// vector is by trial index regardless of scheduling.
pub fn run_point(
    cfg: &SystemConfig,
    code: &ParityCheckMatrix,
    genie: GenieFlags,
    track_ber: bool,
) -> Vec<TrialResult> {
    run_point_impl(cfg, code, genie, track_ber, false).into_iter().map(|(r, _)| r).collect()
}

fn run_point_impl(
    cfg: &SystemConfig,
    code: &ParityCheckMatrix,
    genie: GenieFlags,
    track_ber: bool,
    render_diag: bool,
) -> Vec<(TrialResult, String)> {
    let tag = point_tag(cfg.ka, cfg.ebn0_db);
    (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(cfg.seed, tag, trial as u64);
            let (result, diag) = run_trial_full(cfg, code, seed, genie, track_ber);
            let rows = if render_diag {
                render_diag_rows(cfg.ka, cfg.ebn0_db, trial, &diag)
            } else {
                String::new()
            };
            (result, rows)
        })
        .collect()
}

/// Per-iteration diagnostics as CSV rows (one per estimator iteration).
fn render_diag_rows(ka: usize, ebn0_db: f64, trial: usize, diag: &crate::receiver::RunDiag) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for (round, rd) in diag.rounds.iter().enumerate() {
        for it in &rd.iterations {
            let ber = it.ber.map_or(String::new(), |b| format!("{b:.8}"));
            let _ = writeln!(
                out,
                "{ka},{ebn0_db:.4},{trial},{round},{it_idx},{detected},{verified},{llr:.4},{ber}",
                it_idx = it.iteration,
                detected = rd.detected,
                verified = it.verified_total,
                llr = it.mean_abs_llr,
            );
        }
    }
    out
}

/// Header comment plus column names of the diagnostics stream.
pub fn diag_header(seed: u64) -> String {
    format!(
        "# ura-sim diag {CSV_SCHEMA} seed={seed}\nka,ebn0_db,trial,sic_round,iteration,detected,verified_total,mean_abs_llr,ber\n"
    )
}

/// Aggregated results of one sweep point.
#[derive(Debug, Clone)]
pub struct PointSummary {
    pub ka: usize,
    pub ebn0_db: f64,
    pub trials: usize,
    pub pupe: f64,
    pub pupe_ci95: f64,
    pub false_alarm: f64,
    pub mean_sic_rounds: f64,
    pub mean_ese_iters: f64,
    pub wall_time_s: f64,
}

impl PointSummary {
    pub fn from_results(ka: usize, ebn0_db: f64, results: &[TrialResult]) -> Self {
        let n = results.len() as f64;
        Self {
            ka,
            ebn0_db,
            trials: results.len(),
            pupe: metrics::pupe(results),
            pupe_ci95: metrics::pupe_ci95(results),
            false_alarm: metrics::false_alarm_rate(results),
            mean_sic_rounds: results.iter().map(|r| r.sic_rounds as f64).sum::<f64>() / n,
            mean_ese_iters: results.iter().map(|r| r.ese_iters as f64).sum::<f64>() / n,
            wall_time_s: results.iter().map(|r| r.wall_time).sum(),
        }
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{:.4},{},{:.6},{:.6},{:.6},{:.4},{:.4},{:.3}",
            self.ka,
            self.ebn0_db,
            self.trials,
            self.pupe,
            self.pupe_ci95,
            self.false_alarm,
            self.mean_sic_rounds,
            self.mean_ese_iters,
            self.wall_time_s
        )
    }
}

/// Errors from sweep configuration or output.
#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep values must be non-empty and strictly increasing")]
    BadValues,
    #[error("ka values must be positive integers, got {0}")]
    BadKa(f64),
    #[error("config error: {0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Bracket(#[from] BracketError),
}

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Ebn0Db,
    Ka,
}

/// A sweep request: the varied parameter, its values, and the trial count.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub trials_per_point: usize,
}

impl SweepSpec {
    fn validate(&self) -> Result<(), SweepError> {
        if self.values.is_empty() || self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SweepError::BadValues);
        }
        Ok(())
    }
}

/// Applies one sweep value to a copy of the base config.
fn config_at(
    base: &SystemConfig,
    variable: SweepVariable,
    value: f64,
    trials: usize,
) -> Result<SystemConfig, SweepError> {
    let mut cfg = base.clone();
    cfg.trials = trials;
    match variable {
        SweepVariable::Ebn0Db => cfg.ebn0_db = value,
        SweepVariable::Ka => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(SweepError::BadKa(value));
            }
            cfg.ka = value as usize;
            // budget tracks the load unless the base config pinned it away
            // from the base load
            if base.detection.budget == base.ka {
                cfg.detection.budget = cfg.ka;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a sweep and writes one CSV row per point.
///
/// Columns: `ka, ebn0_db, trials, pupe, pupe_ci95, false_alarm,
/// mean_sic_rounds, mean_ese_iters, wall_time_s`. Deterministic given the
/// master seed, except for the wall-time column.
pub fn run_sweep(
    spec: &SweepSpec,
    base: &SystemConfig,
    code: &ParityCheckMatrix,
    genie: GenieFlags,
    out: &mut dyn Write,
) -> Result<Vec<PointSummary>, SweepError> {
    run_sweep_with_diag(spec, base, code, genie, out, None)
}

/// [`run_sweep`] with an optional per-iteration diagnostics stream.
pub fn run_sweep_with_diag(
    spec: &SweepSpec,
    base: &SystemConfig,
    code: &ParityCheckMatrix,
    genie: GenieFlags,
    out: &mut dyn Write,
    mut diag: Option<&mut dyn Write>,
) -> Result<Vec<PointSummary>, SweepError> {
    spec.validate()?;
    writeln!(out, "# ura-sim sweep {CSV_SCHEMA} seed={}", base.seed)?;
    writeln!(
        out,
        "ka,ebn0_db,trials,pupe,pupe_ci95,false_alarm,mean_sic_rounds,mean_ese_iters,wall_time_s"
    )?;
    if let Some(d) = diag.as_deref_mut() {
        d.write_all(diag_header(base.seed).as_bytes())?;
    }
    let mut summaries = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        let cfg = config_at(base, spec.variable, value, spec.trials_per_point)?;
        let outcomes = run_point_impl(&cfg, code, genie, false, diag.is_some());
        if let Some(d) = diag.as_deref_mut() {
            for (_, rows) in &outcomes {
                d.write_all(rows.as_bytes())?;
            }
        }
        let results: Vec<TrialResult> = outcomes.into_iter().map(|(r, _)| r).collect();
        let summary = PointSummary::from_results(cfg.ka, cfg.ebn0_db, &results);
        writeln!(out, "{}", summary.csv_row())?;
        summaries.push(summary);
    }
    Ok(summaries)
}

/// Per-iteration BER averages for one operating point.
#[derive(Debug, Clone)]
pub struct ConvergencePoint {
    pub ebn0_db: f64,
    /// Mean BER per estimator iteration, index 0 = iteration 1.
    pub ber: Vec<f64>,
    /// 95% confidence half-width per iteration.
    pub ci95: Vec<f64>,
}

/// Runs the convergence study: genie detection (true active set injected,
/// bypassing detection), BER recorded per estimator iteration, averaged
/// over trials. Writes rows `ebn0_db, iteration, ber`.
pub fn run_convergence(
    base: &SystemConfig,
    ebn0_list: &[f64],
    code: &ParityCheckMatrix,
    out: &mut dyn Write,
) -> Result<Vec<ConvergencePoint>, SweepError> {
    run_convergence_with_diag(base, ebn0_list, code, out, None)
}

/// [`run_convergence`] with an optional per-iteration diagnostics stream.
pub fn run_convergence_with_diag(
    base: &SystemConfig,
    ebn0_list: &[f64],
    code: &ParityCheckMatrix,
    out: &mut dyn Write,
    mut diag: Option<&mut dyn Write>,
) -> Result<Vec<ConvergencePoint>, SweepError> {
    if ebn0_list.is_empty() || ebn0_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SweepError::BadValues);
    }
    writeln!(out, "# ura-sim converge {CSV_SCHEMA} seed={} ka={}", base.seed, base.ka)?;
    writeln!(out, "ebn0_db,iteration,ber")?;
    if let Some(d) = diag.as_deref_mut() {
        d.write_all(diag_header(base.seed).as_bytes())?;
    }
    let genie = GenieFlags { detect: true, verify: false };
    let mut points = Vec::with_capacity(ebn0_list.len());
    for &ebn0 in ebn0_list {
        let mut cfg = base.clone();
        cfg.ebn0_db = ebn0;
        cfg.validate()?;
        let outcomes = run_point_impl(&cfg, code, genie, true, diag.is_some());
        if let Some(d) = diag.as_deref_mut() {
            for (_, rows) in &outcomes {
                d.write_all(rows.as_bytes())?;
            }
        }
        let results: Vec<TrialResult> = outcomes.into_iter().map(|(r, _)| r).collect();
        let iters = cfg.max_ese_iters;
        let mut ber = vec![0.0; iters];
        let mut ber_sq = vec![0.0; iters];
        let n = results.len() as f64;
        for r in &results {
            assert_eq!(r.per_iteration_ber.len(), iters);
            for (k, &b) in r.per_iteration_ber.iter().enumerate() {
                ber[k] += b;
                ber_sq[k] += b * b;
            }
        }
        for b in &mut ber {
            *b /= n;
        }
        let ci95: Vec<f64> = (0..iters)
            .map(|k| {
                if results.len() < 2 {
                    return f64::NAN;
                }
                let var = (ber_sq[k] / n - ber[k] * ber[k]).max(0.0) * n / (n - 1.0);
                1.96 * (var / n).sqrt()
            })
            .collect();
        for (k, &b) in ber.iter().enumerate() {
            writeln!(out, "{:.4},{},{:.8}", ebn0, k + 1, b)?;
        }
        points.push(ConvergencePoint { ebn0_db: ebn0, ber, ci95 });
    }
    Ok(points)
}

/// Minimum Eb/N0 (dB) achieving the target PUPE, by bisection at the given
/// trial count per probed point. Deterministic given the master seed.
pub fn min_ebn0_search(
    base: &SystemConfig,
    code: &ParityCheckMatrix,
    target_pupe: f64,
    lo_db: f64,
    hi_db: f64,
    trials_per_point: usize,
) -> Result<f64, SweepError> {
    let eval = |db: f64| {
        let mut cfg = base.clone();
        cfg.ebn0_db = db;
        cfg.trials = trials_per_point;
        let results = run_point(&cfg, code, GenieFlags::default(), false);
        metrics::pupe(&results)
    };
    Ok(metrics::min_ebn0_search(target_pupe, lo_db, hi_db, eval)?)
}

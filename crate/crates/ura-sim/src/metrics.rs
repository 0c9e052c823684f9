//! Error-rate accounting and the minimum-Eb/N0 bisection search.
//!
//! PUPE is the per-user probability that a sent message is missing from the
//! decoded list, estimated by the empirical mean over trials. Duplicate
//! sent messages are treated as a multiset: one recovered copy satisfies a
//! single multiplicity unit.

use std::collections::HashMap;

use thiserror::Error;

use crate::phy::UserMessage;
use crate::receiver::DecodedList;

/// Outcome of one Monte-Carlo trial.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub sent: Vec<UserMessage>,
    pub recovered: DecodedList,
    /// First-round BER trace (genie/convergence studies), may be empty.
    pub per_iteration_ber: Vec<f64>,
    pub sic_rounds: usize,
    /// Total estimator iterations across all rounds.
    pub ese_iters: usize,
    pub wall_time: f64,
}

impl TrialResult {
    /// Missed-message fraction of this trial.
    pub fn pupe(&self) -> f64 {
        let ka = self.sent.len();
        if ka == 0 {
            return 0.0;
        }
        let mut multiplicity: HashMap<&[u8], usize> = HashMap::new();
        for m in &self.sent {
            *multiplicity.entry(m.bits()).or_insert(0) += 1;
        }
        let mut misses = 0usize;
        for (bits, mult) in multiplicity {
            let covered = usize::from(self.recovered.contains_bits(bits));
            misses += mult - covered.min(mult);
        }
        misses as f64 / ka as f64
    }

    /// Recovered-but-never-sent fraction of this trial.
    pub fn false_alarms(&self) -> f64 {
        let ka = self.sent.len();
        if ka == 0 {
            return 0.0;
        }
        let sent: std::collections::HashSet<&[u8]> =
            self.sent.iter().map(|m| m.bits()).collect();
        let phantom = self
            .recovered
            .entries()
            .iter()
            .filter(|e| !sent.contains(e.message.bits()))
            .count();
        phantom as f64 / ka as f64
    }
}

/// Mean PUPE over trials.
pub fn pupe(results: &[TrialResult]) -> f64 {
    assert!(!results.is_empty(), "pupe needs at least one trial");
    results.iter().map(TrialResult::pupe).sum::<f64>() / results.len() as f64
}

/// 95% confidence half-width of the PUPE estimate (normal approximation
/// over per-trial values).
pub fn pupe_ci95(results: &[TrialResult]) -> f64 {
    let n = results.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = pupe(results);
    let var = results.iter().map(|r| (r.pupe() - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    1.96 * (var / n as f64).sqrt()
}

/// Mean false-alarm rate over trials.
pub fn false_alarm_rate(results: &[TrialResult]) -> f64 {
    assert!(!results.is_empty(), "false_alarm_rate needs at least one trial");
    results.iter().map(TrialResult::false_alarms).sum::<f64>() / results.len() as f64
}

/// Bracket violation in the minimum-Eb/N0 search.
#[derive(Debug, Error)]
#[error(
    "bracket violated: pupe({lo_db} dB) = {lo_pupe} must exceed target {target} >= pupe({hi_db} dB) = {hi_pupe}"
)]
pub struct BracketError {
    pub lo_db: f64,
    pub hi_db: f64,
    pub lo_pupe: f64,
    pub hi_pupe: f64,
    pub target: f64,
}

/// Bisects the empirical PUPE curve to 0.1 dB resolution and returns the
/// smallest tested Eb/N0 whose measured PUPE meets the target. `eval` maps
/// an Eb/N0 in dB to a measured PUPE; it is the caller's responsibility to
/// make it deterministic if reproducibility is required.
pub fn min_ebn0_search(
    target_pupe: f64,
    lo_db: f64,
    hi_db: f64,
    mut eval: impl FnMut(f64) -> f64,
) -> Result<f64, BracketError> {
    assert!(lo_db < hi_db, "need lo_db < hi_db");
    let lo_pupe = eval(lo_db);
    if target_pupe >= lo_pupe {
        // even the low endpoint meets the target
        return Ok(lo_db);
    }
    let hi_pupe = eval(hi_db);
    if hi_pupe > target_pupe {
        return Err(BracketError { lo_db, hi_db, lo_pupe, hi_pupe, target: target_pupe });
    }
    let mut lo = lo_db;
    let mut hi = hi_db;
    while hi - lo > 0.1 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) <= target_pupe {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

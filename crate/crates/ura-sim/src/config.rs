//! Simulation parameters, validation, and the Eb/N0 ↔ noise-variance map.
//!
//! A [`SystemConfig`] owns every scalar knob of a run. It can be built from
//! the shipped reference defaults, loaded from a TOML file, or assembled by
//! the CLI (flags override file values). All consistency rules are enforced
//! by [`SystemConfig::validate`], after which the config is immutable and
//! freely shareable across parallel trials.

use serde::Deserialize;
use thiserror::Error;

/// Errors from config construction or validation.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("header bits ({header}) + payload bits ({payload}) != total bits ({total})")]
    BitSplit { header: usize, payload: usize, total: usize },
    #[error("{name} must be strictly positive")]
    NonPositive { name: &'static str },
    #[error("header bits ({0}) too large; codebook size 2^Bp must fit in memory (Bp <= 30)")]
    HeaderTooWide(usize),
    #[error("power profile: mean squared amplitude {0} deviates from 1 by more than 1e-3")]
    PowerNotNormalized(f64),
    #[error("power profile: amplitudes must be positive, got {0}")]
    NonPositiveAmplitude(f64),
    #[error("power profile: {groups} groups exceed codebook size {t_size}")]
    TooManyGroups { groups: usize, t_size: usize },
    #[error("detection threshold {0} outside (0, 1]")]
    BadThreshold(f64),
    #[error("ebn0_db must be finite, got {0}")]
    NonFiniteEbn0(f64),
    #[error("failed to parse config file: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Scaling convention for the estimator LLR prefactor.
///
/// `Full` uses the factor 4 that falls out of a Gaussian likelihood whose
/// exponent divides by Var; `Half` uses the textbook factor 2 (exponent
/// divided by 2*Var). Provided as a sensitivity switch; `Full` is the
/// default and the setting all shipped results are pinned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LlrScale {
    #[default]
    Full,
    Half,
}

impl LlrScale {
    /// Numeric prefactor applied in the estimator LLR.
    pub fn prefactor(self) -> f64 {
        match self {
            LlrScale::Full => 4.0,
            LlrScale::Half => 2.0,
        }
    }
}

/// Stopping rule for activity detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionMode {
    /// Select exactly `budget` columns (receiver assumes Ka is known).
    #[default]
    FixedCount,
    /// Stop when residual energy / initial energy <= `threshold`.
    ResidualThreshold,
}

/// Activity-detection policy: how many columns to pick and when to stop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionPolicy {
    /// Maximum detections per SIC round.
    pub budget: usize,
    pub mode: DetectionMode,
    /// Relative residual-energy stop, used in `ResidualThreshold` mode.
    pub threshold: f64,
}

impl DetectionPolicy {
    /// Fixed-count policy with the given budget.
    pub fn fixed(budget: usize) -> Self {
        Self { budget, mode: DetectionMode::FixedCount, threshold: 1e-2 }
    }
}

/// Per-group power-division amplitudes over the signature codebook.
///
/// Columns are partitioned into `m` contiguous equal-size groups (the last
/// group absorbs any remainder) and every column in group `g` transmits
/// with amplitude `amplitudes[g]`. The mean squared amplitude is 1, so the
/// per-user energy normalization is load-independent.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    amplitudes: Vec<f64>,
}

/// Shipped amplitude presets for the loads the power-division groups were
/// optimized at. Other loads default to uniform power.
const POWER_PRESETS: &[(usize, &[f64])] = &[
    (150, &[0.9098, 0.9947, 1.0876]),
    (175, &[0.9141, 1.0791]),
    (200, &[0.8997, 1.0911]),
    (225, &[0.8620, 0.9878, 1.1319]),
    (250, &[0.8451, 0.9847, 1.1472]),
];

impl PowerProfile {
    /// Single-group unit-amplitude profile.
    pub fn uniform() -> Self {
        Self { amplitudes: vec![1.0] }
    }

    /// Validates that amplitudes are positive with mean square 1 (within 1e-3).
    pub fn new(amplitudes: Vec<f64>) -> Result<Self, ConfigError> {
        if amplitudes.is_empty() {
            return Err(ConfigError::NonPositive { name: "power.amplitudes" });
        }
        for &p in &amplitudes {
            if !p.is_finite() || p <= 0.0 {
                return Err(ConfigError::NonPositiveAmplitude(p));
            }
        }
        let mean_sq = amplitudes.iter().map(|p| p * p).sum::<f64>() / amplitudes.len() as f64;
        if (mean_sq - 1.0).abs() > 1e-3 {
            return Err(ConfigError::PowerNotNormalized(mean_sq));
        }
        Ok(Self { amplitudes })
    }

    /// Shipped preset for the given user load, if one exists.
    pub fn preset_for(ka: usize) -> Option<Self> {
        POWER_PRESETS
            .iter()
            .find(|(k, _)| *k == ka)
            .map(|(_, amps)| Self { amplitudes: amps.to_vec() })
    }

    /// Number of power groups `m`.
    pub fn group_count(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Group index of a codebook column: contiguous equal blocks, the last
    /// group absorbing the remainder.
    pub fn group_of(&self, column: usize, t_size: usize) -> usize {
        assert!(column < t_size, "column {column} out of range for codebook size {t_size}");
        let m = self.amplitudes.len();
        let block = t_size / m;
        (column / block.max(1)).min(m - 1)
    }

    /// Amplitude of the group containing `column`.
    pub fn amplitude_for(&self, column: usize, t_size: usize) -> f64 {
        self.amplitudes[self.group_of(column, t_size)]
    }
}

/// Every parameter of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of active users (Ka).
    pub ka: usize,
    /// Message length in bits (B).
    pub b_total: usize,
    /// Header bits selecting the signature (Bp).
    pub b_header: usize,
    /// Payload bits fed to the channel code (Bc).
    pub b_payload: usize,
    /// Signature length in chips (np).
    pub n_chips: usize,
    /// Channel-codeword length in symbols (nc).
    pub n_symbols: usize,
    /// Per-user energy-per-bit target in dB.
    pub ebn0_db: f64,
    /// Cap on estimator<->decoder iterations per SIC round.
    pub max_ese_iters: usize,
    /// Cap on SIC rounds.
    pub max_sic_rounds: usize,
    /// Belief-propagation iterations per decoder call.
    pub bp_iters: usize,
    /// Monte-Carlo repetitions.
    pub trials: usize,
    /// Master RNG seed.
    pub seed: u64,
    /// Estimator LLR prefactor convention.
    pub llr_scale: LlrScale,
    pub power: PowerProfile,
    pub detection: DetectionPolicy,
}

impl SystemConfig {
    /// Reference configuration: B=100 split 12+88, 114x264 channel uses,
    /// 20 estimator iterations. Power amplitudes come from the preset table
    /// when `ka` matches one, otherwise uniform.
    pub fn defaults_for(ka: usize) -> Self {
        Self {
            ka,
            b_total: 100,
            b_header: 12,
            b_payload: 88,
            n_chips: 114,
            n_symbols: 264,
            ebn0_db: 4.0,
            max_ese_iters: 20,
            max_sic_rounds: 8,
            bp_iters: 20,
            trials: 1000,
            seed: 1,
            llr_scale: LlrScale::Full,
            power: PowerProfile::preset_for(ka).unwrap_or_else(PowerProfile::uniform),
            detection: DetectionPolicy::fixed(ka),
        }
    }

    /// Parses a TOML config; absent keys fall back to the reference defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let file: FileConfig = toml::from_str(text)?;
        let ka = file.ka.unwrap_or(25);
        let mut cfg = SystemConfig::defaults_for(ka);
        if let Some(v) = file.b_total {
            cfg.b_total = v;
        }
        if let Some(v) = file.b_header {
            cfg.b_header = v;
        }
        if let Some(v) = file.b_payload {
            cfg.b_payload = v;
        }
        if let Some(v) = file.n_chips {
            cfg.n_chips = v;
        }
        if let Some(v) = file.n_symbols {
            cfg.n_symbols = v;
        }
        if let Some(v) = file.ebn0_db {
            cfg.ebn0_db = v;
        }
        if let Some(v) = file.max_ese_iters {
            cfg.max_ese_iters = v;
        }
        if let Some(v) = file.max_sic_rounds {
            cfg.max_sic_rounds = v;
        }
        if let Some(v) = file.bp_iters {
            cfg.bp_iters = v;
        }
        if let Some(v) = file.trials {
            cfg.trials = v;
        }
        if let Some(v) = file.seed {
            cfg.seed = v;
        }
        if let Some(v) = file.llr_scale {
            cfg.llr_scale = v;
        }
        if let Some(p) = file.power {
            if let Some(amps) = p.amplitudes {
                cfg.power = PowerProfile::new(amps)?;
            }
        }
        if let Some(d) = file.detection {
            if let Some(b) = d.budget {
                cfg.detection.budget = b;
            }
            if let Some(m) = d.mode {
                cfg.detection.mode = m;
            }
            if let Some(t) = d.threshold {
                cfg.detection.threshold = t;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every structural invariant. Call after any field mutation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.b_header + self.b_payload != self.b_total {
            return Err(ConfigError::BitSplit {
                header: self.b_header,
                payload: self.b_payload,
                total: self.b_total,
            });
        }
        for (name, v) in [
            ("ka", self.ka),
            ("b_total", self.b_total),
            ("b_header", self.b_header),
            ("b_payload", self.b_payload),
            ("n_chips", self.n_chips),
            ("n_symbols", self.n_symbols),
            ("max_ese_iters", self.max_ese_iters),
            ("max_sic_rounds", self.max_sic_rounds),
            ("bp_iters", self.bp_iters),
            ("detection.budget", self.detection.budget),
        ] {
            if v == 0 {
                return Err(ConfigError::NonPositive { name });
            }
        }
        if self.b_header > 30 {
            return Err(ConfigError::HeaderTooWide(self.b_header));
        }
        if !self.ebn0_db.is_finite() {
            return Err(ConfigError::NonFiniteEbn0(self.ebn0_db));
        }
        // re-run amplitude checks in case of direct field edits
        PowerProfile::new(self.power.amplitudes().to_vec())?;
        if self.power.group_count() > self.codebook_size() {
            return Err(ConfigError::TooManyGroups {
                groups: self.power.group_count(),
                t_size: self.codebook_size(),
            });
        }
        if self.detection.mode == DetectionMode::ResidualThreshold
            && !(self.detection.threshold > 0.0 && self.detection.threshold <= 1.0)
        {
            return Err(ConfigError::BadThreshold(self.detection.threshold));
        }
        Ok(())
    }

    /// Signature codebook size `T = 2^Bp`.
    pub fn codebook_size(&self) -> usize {
        1usize << self.b_header
    }

    /// Total channel uses `n = n_chips * n_symbols`.
    pub fn channel_uses(&self) -> usize {
        self.n_chips * self.n_symbols
    }

    /// Noise variance realizing the configured Eb/N0:
    /// `sigma_n^2 = n_symbols / (2 * B * 10^(ebn0_db/10))`.
    pub fn noise_variance(&self) -> f64 {
        self.n_symbols as f64 / (2.0 * self.b_total as f64 * 10f64.powf(self.ebn0_db / 10.0))
    }
}

/// Inverse of [`SystemConfig::noise_variance`]: the Eb/N0 (dB) realized by a
/// given noise variance.
pub fn ebn0_db_from_noise(n_symbols: usize, b_total: usize, sigma2: f64) -> f64 {
    10.0 * (n_symbols as f64 / (2.0 * b_total as f64 * sigma2)).log10()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    ka: Option<usize>,
    b_total: Option<usize>,
    b_header: Option<usize>,
    b_payload: Option<usize>,
    n_chips: Option<usize>,
    n_symbols: Option<usize>,
    ebn0_db: Option<f64>,
    max_ese_iters: Option<usize>,
    max_sic_rounds: Option<usize>,
    bp_iters: Option<usize>,
    trials: Option<usize>,
    seed: Option<u64>,
    llr_scale: Option<LlrScale>,
    power: Option<FilePower>,
    detection: Option<FileDetection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilePower {
    amplitudes: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDetection {
    budget: Option<usize>,
    mode: Option<DetectionMode>,
    threshold: Option<f64>,
}

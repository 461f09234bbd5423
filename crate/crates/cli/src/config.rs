//! Experiment configuration: a flat key = value file with typed keys.
//!
//! Precedence is flags > file > defaults; unknown keys are rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use vqsid_core::codebook::{LbgConfig, NormMode};
use vqsid_core::dsp::FrontendConfig;
use vqsid_core::synth::{Condition, SynthSpec};

/// Whether size selection tunes on the same sentences it is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPolicy {
    /// Tuning set == scoring set (a posteriori selection).
    Shared,
    /// Even-indexed sentences tune, odd-indexed sentences score.
    Disjoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub frontend: FrontendConfig,
    pub lbg: LbgConfig,
    pub max_bits: usize,
    pub synth: SynthSpec,
    pub init_bits: usize,
    pub theta: f64,
    pub base_bits: usize,
    pub norm_mode: NormMode,
    pub tuning_condition: Condition,
    pub split_policy: SplitPolicy,
    pub histogram_bins: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            frontend: FrontendConfig::default(),
            lbg: LbgConfig::default(),
            max_bits: 7,
            synth: SynthSpec::default(),
            init_bits: 3,
            theta: 0.5,
            base_bits: 3,
            norm_mode: NormMode::PerBits,
            tuning_condition: Condition::Matched,
            split_policy: SplitPolicy::Shared,
            histogram_bins: 20,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config = ExperimentConfig::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("config line {}: expected key = value", lineno + 1))?;
            self.set(key.trim(), value.trim())
                .with_context(|| format!("config line {}", lineno + 1))?;
        }
        // Cross-field constraints are checked once every key is applied, so
        // keys may arrive in any order.
        self.validate()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "alpha" => self.frontend.preemphasis_alpha = parse_f64(key, value)?,
            "frame_len" => self.frontend.frame_len = parse_usize(key, value)?,
            "overlap" => self.frontend.overlap_fraction = parse_fraction(key, value)?,
            "lpc_order" => self.frontend.lpc_order = parse_usize(key, value)?,
            "max_bits" => self.max_bits = parse_usize(key, value)?,
            "split_epsilon" => self.lbg.split_epsilon = parse_f64(key, value)?,
            "convergence_threshold" => self.lbg.convergence_threshold = parse_f64(key, value)?,
            "max_iterations" => self.lbg.max_iterations = parse_usize(key, value)?,
            "n_speakers" => self.synth.n_speakers = parse_usize(key, value)?,
            "train_seconds" => self.synth.train_seconds = parse_f64(key, value)?,
            "n_test_sentences" => self.synth.n_test_sentences = parse_usize(key, value)?,
            "sentence_seconds" => self.synth.sentence_seconds = parse_f64(key, value)?,
            "seed" => {
                self.synth.master_seed =
                    value.parse().with_context(|| format!("invalid {key}: {value}"))?
            }
            "filter_jitter_std" => self.synth.filter_jitter_std = parse_f64(key, value)?,
            "snr_db" => {
                self.synth.snr_db =
                    if value == "inf" { f64::INFINITY } else { parse_f64(key, value)? }
            }
            "init_bits" => self.init_bits = parse_usize(key, value)?,
            "theta" => self.theta = parse_f64(key, value)?,
            "base_bits" => self.base_bits = parse_usize(key, value)?,
            "norm_mode" => {
                self.norm_mode = match value {
                    "none" => NormMode::None,
                    "per_bits" => NormMode::PerBits,
                    _ => bail!("invalid norm_mode: {value} (expected none|per_bits)"),
                }
            }
            "tuning_condition" => self.tuning_condition = parse_condition(value)?,
            "split_policy" => {
                self.split_policy = match value {
                    "shared" => SplitPolicy::Shared,
                    "disjoint" => SplitPolicy::Disjoint,
                    _ => bail!("invalid split_policy: {value} (expected shared|disjoint)"),
                }
            }
            "histogram_bins" => self.histogram_bins = parse_usize(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => bail!("unknown config key: {key}"),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let checks: &[(bool, &str)] = &[
            (
                (0.0..1.0).contains(&self.frontend.preemphasis_alpha),
                "alpha must be in [0, 1)",
            ),
            (self.frontend.frame_len >= 2, "frame_len must be >= 2"),
            (
                (0.0..1.0).contains(&self.frontend.overlap_fraction),
                "overlap must be in [0, 1)",
            ),
            (self.frontend.lpc_order >= 1, "lpc_order must be >= 1"),
            (self.lbg.split_epsilon > 0.0, "split_epsilon must be positive"),
            (self.theta > 0.0, "theta must be positive"),
            (self.init_bits <= self.max_bits, "init_bits must be <= max_bits"),
            (self.base_bits < self.max_bits, "base_bits must be < max_bits"),
            (self.synth.n_speakers >= 2, "n_speakers must be >= 2"),
            (self.synth.train_seconds > 0.0, "train_seconds must be positive"),
            (self.synth.sentence_seconds > 0.0, "sentence_seconds must be positive"),
            (self.histogram_bins >= 1, "histogram_bins must be >= 1"),
        ];
        for &(ok, msg) in checks {
            if !ok {
                bail!("{msg}");
            }
        }
        Ok(())
    }

    /// Applies `key=value` overrides from the command line on top of the file.
    pub fn apply_overrides(&mut self, overrides: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in overrides {
            self.set(k, v)?;
        }
        self.validate()
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.out_dir.join("corpus")
    }

    pub fn features_dir(&self) -> PathBuf {
        self.out_dir.join("features")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.out_dir.join("models")
    }
}

pub fn parse_condition(value: &str) -> Result<Condition> {
    match value {
        "matched" => Ok(Condition::Matched),
        "mismatched" => Ok(Condition::Mismatched),
        _ => bail!("invalid condition: {value} (expected matched|mismatched)"),
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value.parse().with_context(|| format!("invalid {key}: {value}"))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value.parse().with_context(|| format!("invalid {key}: {value}"))
}

/// Accepts plain floats and `a/b` rationals (the framing overlap is naturally
/// written as 2/3).
fn parse_fraction(key: &str, value: &str) -> Result<f64> {
    if let Some((num, den)) = value.split_once('/') {
        let num: f64 = num.trim().parse().with_context(|| format!("invalid {key}: {value}"))?;
        let den: f64 = den.trim().parse().with_context(|| format!("invalid {key}: {value}"))?;
        if den == 0.0 {
            bail!("invalid {key}: division by zero");
        }
        Ok(num / den)
    } else {
        parse_f64(key, value)
    }
}

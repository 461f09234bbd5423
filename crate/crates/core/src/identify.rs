//! Minimum-distortion speaker identification and its distortion statistics.
//!
//! A test sentence is scored against every speaker's codebook at that
//! speaker's assigned size; the speaker with the smallest (optionally
//! 1/Nq-normalized) average distortion wins. Ties go to the earlier speaker
//! in bank order.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::codebook::{avg_distortion, normalize_distortion, CodebookError, CodebookFamily, NormMode};
use crate::dsp::FeatureSequence;

#[derive(Debug, Clone, PartialEq)]
pub enum IdentifyError {
    Codebook(CodebookError),
    /// Test sequence labeled with a speaker the bank does not contain.
    UnknownSpeaker(String),
    /// Assignment does not cover exactly the bank's speakers.
    AssignmentMismatch,
    /// Test sequence carries no speaker label.
    UnlabeledSequence,
}

impl fmt::Display for IdentifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdentifyError::Codebook(e) => write!(f, "{e}"),
            IdentifyError::UnknownSpeaker(s) => write!(f, "unknown speaker label: {s}"),
            IdentifyError::AssignmentMismatch => {
                write!(f, "size assignment does not cover the model bank")
            }
            IdentifyError::UnlabeledSequence => write!(f, "test sequence has no speaker label"),
        }
    }
}

impl From<CodebookError> for IdentifyError {
    fn from(e: CodebookError) -> Self {
        IdentifyError::Codebook(e)
    }
}

impl core::error::Error for IdentifyError {}

/// Ordered collection of per-speaker codebook families.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBank {
    pub speakers: Vec<String>,
    pub families: Vec<CodebookFamily>,
}

impl ModelBank {
    pub fn new(speakers: Vec<String>, families: Vec<CodebookFamily>) -> Self {
        assert_eq!(speakers.len(), families.len());
        assert!(speakers.len() >= 2, "need at least 2 speakers");
        ModelBank { speakers, families }
    }

    pub fn len(&self) -> usize {
        self.speakers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speakers.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.speakers.iter().position(|s| s == label)
    }

    /// Smallest max_bits across the bank's families.
    pub fn max_bits(&self) -> usize {
        self.families.iter().map(CodebookFamily::max_bits).min().unwrap()
    }
}

/// Per-speaker codebook sizes, indexed in bank order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeAssignment {
    pub bits: Vec<usize>,
}

impl SizeAssignment {
    pub fn uniform(n_speakers: usize, bits: usize) -> Self {
        SizeAssignment { bits: vec![bits; n_speakers] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Distortion statistics of one speaker's codebook at one size.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionStats {
    pub speaker: String,
    pub bits: usize,
    /// Mean distortion of the speaker's own test sentences against his model.
    pub mean_self: f64,
    /// Sample standard deviation (n-1) of other speakers' sentence distortions
    /// against this model.
    pub std_other: f64,
    /// `std_other / mean_self`; infinite when `mean_self` is zero.
    pub ratio: f64,
    pub degenerate: bool,
}

/// Identification outcome over a labeled test set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub speakers: Vec<String>,
    pub n_test: Vec<usize>,
    pub n_correct: Vec<usize>,
    /// `confusion[true][predicted]` sentence counts.
    pub confusion: Vec<Vec<usize>>,
    /// Speakers present in the bank but absent from the test set.
    pub untested_speakers: Vec<String>,
}

impl EvalReport {
    pub fn per_speaker_rate(&self, i: usize) -> f64 {
        self.n_correct[i] as f64 / self.n_test[i] as f64
    }

    /// Unweighted mean of per-speaker rates (all speakers equally probable).
    pub fn overall_rate(&self) -> f64 {
        let tested: Vec<usize> =
            (0..self.speakers.len()).filter(|&i| self.n_test[i] > 0).collect();
        let sum: f64 = tested.iter().map(|&i| self.per_speaker_rate(i)).sum();
        sum / tested.len() as f64
    }
}

fn check_assignment(bank: &ModelBank, assignment: &SizeAssignment) -> Result<(), IdentifyError> {
    if assignment.len() != bank.len() {
        return Err(IdentifyError::AssignmentMismatch);
    }
    if assignment.bits.iter().zip(&bank.families).any(|(&b, f)| b > f.max_bits()) {
        return Err(IdentifyError::AssignmentMismatch);
    }
    Ok(())
}

/// Normalized average distortion of one sequence against each speaker's model.
pub fn speaker_scores(
    seq: &FeatureSequence,
    bank: &ModelBank,
    assignment: &SizeAssignment,
    norm_mode: NormMode,
) -> Result<Vec<f64>, IdentifyError> {
    check_assignment(bank, assignment)?;
    let mut scores = Vec::with_capacity(bank.len());
    for (family, &bits) in bank.families.iter().zip(&assignment.bits) {
        let d = avg_distortion(seq, family.at(bits))?;
        scores.push(normalize_distortion(d, bits, norm_mode));
    }
    Ok(scores)
}

/// Minimum-distortion identification. Returns the bank index of the winner.
pub fn identify(
    seq: &FeatureSequence,
    bank: &ModelBank,
    assignment: &SizeAssignment,
    norm_mode: NormMode,
) -> Result<usize, IdentifyError> {
    let scores = speaker_scores(seq, bank, assignment, norm_mode)?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Scores every labeled test sequence and tallies per-speaker rates and the
/// confusion matrix.
pub fn evaluate(
    test_set: &[FeatureSequence],
    bank: &ModelBank,
    assignment: &SizeAssignment,
    norm_mode: NormMode,
) -> Result<EvalReport, IdentifyError> {
    check_assignment(bank, assignment)?;
    let n = bank.len();
    let mut n_test = vec![0usize; n];
    let mut n_correct = vec![0usize; n];
    let mut confusion = vec![vec![0usize; n]; n];
    for seq in test_set {
        let label = seq.speaker_label.as_deref().ok_or(IdentifyError::UnlabeledSequence)?;
        let truth = bank
            .index_of(label)
            .ok_or_else(|| IdentifyError::UnknownSpeaker(label.into()))?;
        let predicted = identify(seq, bank, assignment, norm_mode)?;
        n_test[truth] += 1;
        confusion[truth][predicted] += 1;
        if predicted == truth {
            n_correct[truth] += 1;
        }
    }
    let untested_speakers = (0..n)
        .filter(|&i| n_test[i] == 0)
        .map(|i| bank.speakers[i].clone())
        .collect();
    Ok(EvalReport { speakers: bank.speakers.clone(), n_test, n_correct, confusion, untested_speakers })
}

/// Per-speaker distortion statistics at the assigned sizes: mean of own-test
/// distortions, sample std of other speakers' sentence distortions, and their
/// ratio.
pub fn distortion_stats(
    bank: &ModelBank,
    assignment: &SizeAssignment,
    test_set: &[FeatureSequence],
) -> Result<Vec<DistortionStats>, IdentifyError> {
    check_assignment(bank, assignment)?;
    let mut out = Vec::with_capacity(bank.len());
    for (si, (family, &bits)) in bank.families.iter().zip(&assignment.bits).enumerate() {
        let cb = family.at(bits);
        let mut own = Vec::new();
        let mut other = Vec::new();
        for seq in test_set {
            let label = seq.speaker_label.as_deref().ok_or(IdentifyError::UnlabeledSequence)?;
            let truth = bank
                .index_of(label)
                .ok_or_else(|| IdentifyError::UnknownSpeaker(label.into()))?;
            let d = avg_distortion(seq, cb)?;
            if truth == si {
                own.push(d);
            } else {
                other.push(d);
            }
        }
        let mean_self = mean(&own);
        let std_other = sample_std(&other);
        let degenerate = mean_self == 0.0;
        let ratio = if degenerate { f64::INFINITY } else { std_other / mean_self };
        out.push(DistortionStats {
            speaker: bank.speakers[si].clone(),
            bits,
            mean_self,
            std_other,
            ratio,
            degenerate,
        });
    }
    Ok(out)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    libm::sqrt(var)
}

/// One bin of a distortion histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

/// Histogram of self-sentence distortions across all speakers at one common
/// size, binned uniformly over `[0, max observed]`.
pub fn distortion_histogram(
    bank: &ModelBank,
    test_set: &[FeatureSequence],
    bits: usize,
    n_bins: usize,
) -> Result<Vec<HistogramBin>, IdentifyError> {
    assert!(n_bins >= 1);
    let mut distortions = Vec::new();
    for seq in test_set {
        let label = seq.speaker_label.as_deref().ok_or(IdentifyError::UnlabeledSequence)?;
        let truth = bank
            .index_of(label)
            .ok_or_else(|| IdentifyError::UnknownSpeaker(label.into()))?;
        distortions.push(avg_distortion(seq, bank.families[truth].at(bits))?);
    }
    let max = distortions.iter().fold(0.0f64, |a, &b| a.max(b));
    let width = if max > 0.0 { max / n_bins as f64 } else { 1.0 };
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|i| HistogramBin { low: i as f64 * width, high: (i + 1) as f64 * width, count: 0 })
        .collect();
    for d in distortions {
        let idx = if width > 0.0 { ((d / width) as usize).min(n_bins - 1) } else { 0 };
        bins[idx].count += 1;
    }
    Ok(bins)
}

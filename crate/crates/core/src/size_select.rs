//! Per-speaker model-size selection.
//!
//! Three routes to a size assignment: the exhaustive per-speaker sweep over a
//! common size, the greedy search that repeatedly grants one extra bit to the
//! speaker whose increment improves the overall identification rate the most,
//! and the single-pass criterion that grows the models whose
//! std-to-mean-distortion ratio falls below a fraction of the average ratio.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigUint;

use crate::codebook::NormMode;
use crate::dsp::FeatureSequence;
use crate::identify::{
    distortion_stats, evaluate, DistortionStats, IdentifyError, ModelBank, SizeAssignment,
};

/// Exact number of joint size assignments, `num_sizes ^ num_speakers`, with a
/// 2-significant-digit scientific rendering.
pub fn combination_count(num_sizes: usize, num_speakers: usize) -> (BigUint, String) {
    assert!(num_sizes >= 1 && num_speakers >= 1);
    let count = BigUint::from(num_sizes).pow(num_speakers as u32);
    let rendered = render_scientific_2sig(&count);
    (count, rendered)
}

fn render_scientific_2sig(n: &BigUint) -> String {
    use alloc::format;
    let digits = n.to_string();
    let mut exp = digits.len() as i64 - 1;
    let bytes = digits.as_bytes();
    let d = |i: usize| -> u32 {
        if i < bytes.len() { (bytes[i] - b'0') as u32 } else { 0 }
    };
    let mut mantissa = d(0) * 10 + d(1);
    if d(2) >= 5 {
        mantissa += 1;
    }
    if mantissa >= 100 {
        mantissa /= 10;
        exp += 1;
    }
    format!("{}.{}e{}", mantissa / 10, mantissa % 10, exp)
}

/// Equivalent uniform bit count of an assignment, assuming equally probable
/// speakers: `log2(mean of 2^bits)`.
pub fn mean_bits(assignment: &SizeAssignment) -> f64 {
    assert!(!assignment.is_empty());
    let sum: f64 = assignment.bits.iter().map(|&b| (1u64 << b) as f64).sum();
    libm::log2(sum / assignment.len() as f64)
}

/// Outcome of the common-size sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub bits: Vec<usize>,
    /// `rates[speaker][bit index]`, speakers in bank order.
    pub rates: Vec<Vec<f64>>,
    /// Overall rate at each common size.
    pub overall: Vec<f64>,
    /// Per speaker, the smallest swept size attaining that speaker's maximum
    /// rate.
    pub optimal_bits: Vec<usize>,
    /// `histogram[bit index]` = number of speakers whose optimum is that size.
    pub histogram: Vec<usize>,
}

/// Evaluates the tuning set with every speaker at each common size in
/// `bits_range` and records per-speaker rates, minimal-argmax optima, and
/// their histogram.
pub fn per_speaker_sweep(
    bank: &ModelBank,
    tuning_set: &[FeatureSequence],
    bits_range: &[usize],
    norm_mode: NormMode,
) -> Result<SweepResult, IdentifyError> {
    assert!(!bits_range.is_empty());
    let n = bank.len();
    let mut rates = alloc::vec![Vec::with_capacity(bits_range.len()); n];
    let mut overall = Vec::with_capacity(bits_range.len());
    for &b in bits_range {
        let report = evaluate(tuning_set, bank, &SizeAssignment::uniform(n, b), norm_mode)?;
        for (s, row) in rates.iter_mut().enumerate() {
            row.push(if report.n_test[s] > 0 { report.per_speaker_rate(s) } else { f64::NAN });
        }
        overall.push(report.overall_rate());
    }
    let optimal_bits: Vec<usize> = rates
        .iter()
        .map(|row| {
            let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let idx = row.iter().position(|&r| r == best).unwrap();
            bits_range[idx]
        })
        .collect();
    let mut histogram = alloc::vec![0usize; bits_range.len()];
    for &ob in &optimal_bits {
        let idx = bits_range.iter().position(|&b| b == ob).unwrap();
        histogram[idx] += 1;
    }
    Ok(SweepResult { bits: bits_range.to_vec(), rates, overall, optimal_bits, histogram })
}

/// One accepted greedy step.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyStep {
    pub speaker: usize,
    pub new_bits: usize,
    pub overall_rate: f64,
    pub mean_bits: f64,
}

/// Trace of a greedy size search.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyTrace {
    pub init_bits: usize,
    pub initial_rate: f64,
    pub steps: Vec<GreedyStep>,
    pub assignment: SizeAssignment,
}

impl GreedyTrace {
    pub fn final_rate(&self) -> f64 {
        self.steps.last().map_or(self.initial_rate, |s| s.overall_rate)
    }
}

/// Greedy bit allocation: starting from a uniform assignment, repeatedly
/// evaluate every single-speaker one-bit increment and accept the best one as
/// long as it strictly improves the overall tuning rate. Ties among candidates
/// go to the speaker with fewer bits, then the smaller bank index.
pub fn greedy_size_search(
    bank: &ModelBank,
    tuning_set: &[FeatureSequence],
    init_bits: usize,
    max_bits: usize,
    norm_mode: NormMode,
) -> Result<GreedyTrace, IdentifyError> {
    assert!(init_bits <= max_bits);
    let n = bank.len();
    let mut assignment = SizeAssignment::uniform(n, init_bits);
    let initial_rate = evaluate(tuning_set, bank, &assignment, norm_mode)?.overall_rate();
    let mut current_rate = initial_rate;
    let mut steps = Vec::new();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if assignment.bits[i] >= max_bits {
                continue;
            }
            let mut candidate = assignment.clone();
            candidate.bits[i] += 1;
            let rate = evaluate(tuning_set, bank, &candidate, norm_mode)?.overall_rate();
            let better = match best {
                None => true,
                Some((bi, br)) => {
                    rate > br
                        || (rate == br
                            && (assignment.bits[i], i) < (assignment.bits[bi], bi))
                }
            };
            if better {
                best = Some((i, rate));
            }
        }
        match best {
            Some((i, rate)) if rate > current_rate => {
                assignment.bits[i] += 1;
                current_rate = rate;
                steps.push(GreedyStep {
                    speaker: i,
                    new_bits: assignment.bits[i],
                    overall_rate: rate,
                    mean_bits: mean_bits(&assignment),
                });
            }
            _ => break,
        }
    }
    Ok(GreedyTrace { init_bits, initial_rate, steps, assignment })
}

/// Outcome of the ratio criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSelection {
    pub assignment: SizeAssignment,
    pub stats: Vec<DistortionStats>,
    /// Mean ratio over non-degenerate speakers.
    pub mean_ratio: f64,
    /// Speakers excluded from the mean because their own-sentence distortion
    /// was zero.
    pub degenerate_speakers: Vec<String>,
}

/// Single-pass size selection: speakers whose std/mean distortion ratio at
/// `base_bits` is strictly below `theta` times the average ratio get one extra
/// bit; everyone else keeps `base_bits`.
pub fn ratio_criterion_assign(
    bank: &ModelBank,
    tuning_set: &[FeatureSequence],
    base_bits: usize,
    theta: f64,
    _norm_mode: NormMode,
) -> Result<RatioSelection, IdentifyError> {
    assert!(theta > 0.0);
    assert!(base_bits < bank.max_bits());
    let n = bank.len();
    let base = SizeAssignment::uniform(n, base_bits);
    let stats = distortion_stats(bank, &base, tuning_set)?;
    let valid: Vec<&DistortionStats> = stats.iter().filter(|s| !s.degenerate).collect();
    let mean_ratio = valid.iter().map(|s| s.ratio).sum::<f64>() / valid.len() as f64;
    let mut assignment = base;
    for (i, s) in stats.iter().enumerate() {
        if !s.degenerate && s.ratio < theta * mean_ratio {
            assignment.bits[i] = base_bits + 1;
        }
    }
    let degenerate_speakers =
        stats.iter().filter(|s| s.degenerate).map(|s| s.speaker.clone()).collect();
    Ok(RatioSelection { assignment, stats, mean_ratio, degenerate_speakers })
}

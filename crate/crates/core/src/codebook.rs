//! LBG codebook training and quantization distortion.
//!
//! A speaker is modelled by a nested family of codebooks of sizes 2^0..2^max
//! produced by one binary-splitting run: the size-0 codebook is the global
//! centroid, and each larger size starts from the previous codewords split
//! into `w * (1 +/- eps)` and refined by Lloyd iterations under squared
//! Euclidean distance. The splitting initialization keeps the previous
//! partition feasible, so training distortion never increases with the bit
//! count.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dsp::FeatureSequence;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodebookError {
    /// No training vectors.
    NoTrainingData,
    /// Query dimension differs from the codeword dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// Empty sequence passed to a distortion average.
    EmptySequence,
}

impl fmt::Display for CodebookError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodebookError::NoTrainingData => write!(f, "no training data"),
            CodebookError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: codebook has {expected}, vector has {got}")
            }
            CodebookError::EmptySequence => write!(f, "empty sequence"),
        }
    }
}

impl core::error::Error for CodebookError {}

/// Distortion normalization applied when comparing heterogeneous model sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    None,
    /// Divide by `max(bits, 1)`.
    PerBits,
}

/// A VQ codebook of `2^bits` codewords.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub bits: usize,
    pub codewords: Vec<Vec<f64>>,
    /// Mean squared-error per vector on the training data, under the final
    /// codewords.
    pub training_distortion: f64,
}

impl Codebook {
    pub fn dim(&self) -> usize {
        self.codewords.first().map_or(0, Vec::len)
    }
}

/// The nested per-speaker family of codebooks for bits = 0..=max_bits.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookFamily {
    pub codebooks: Vec<Codebook>,
}

impl CodebookFamily {
    pub fn max_bits(&self) -> usize {
        self.codebooks.len() - 1
    }

    pub fn at(&self, bits: usize) -> &Codebook {
        &self.codebooks[bits]
    }

    pub fn dim(&self) -> usize {
        self.codebooks[0].dim()
    }
}

/// LBG training parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LbgConfig {
    /// Relative split perturbation applied as `w * (1 +/- epsilon)`.
    pub split_epsilon: f64,
    /// Lloyd iterations stop when the relative distortion improvement falls
    /// below this threshold.
    pub convergence_threshold: f64,
    pub max_iterations: usize,
}

impl Default for LbgConfig {
    fn default() -> Self {
        LbgConfig { split_epsilon: 0.01, convergence_threshold: 1e-6, max_iterations: 100 }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest codeword under squared Euclidean distance. Ties go to the lowest
/// index. Returns `(index, distortion)`.
pub fn quantize(v: &[f64], cb: &Codebook) -> Result<(usize, f64), CodebookError> {
    if v.len() != cb.dim() {
        return Err(CodebookError::DimensionMismatch { expected: cb.dim(), got: v.len() });
    }
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, w) in cb.codewords.iter().enumerate() {
        let d = squared_distance(v, w);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    Ok((best, best_d))
}

/// Mean quantization distortion of a feature sequence against a codebook.
pub fn avg_distortion(seq: &FeatureSequence, cb: &Codebook) -> Result<f64, CodebookError> {
    if seq.is_empty() {
        return Err(CodebookError::EmptySequence);
    }
    let mut total = 0.0;
    for v in &seq.vectors {
        total += quantize(v, cb)?.1;
    }
    Ok(total / seq.len() as f64)
}

/// The 1/Nq distortion normalization, with a `max(bits, 1)` guard for the
/// single-codeword model.
pub fn normalize_distortion(d: f64, bits: usize, mode: NormMode) -> f64 {
    match mode {
        NormMode::None => d,
        NormMode::PerBits => d / bits.max(1) as f64,
    }
}

/// Trains the nested codebook family by LBG binary splitting.
///
/// `max_bits` is clamped down when the training set has fewer than
/// `2^max_bits` vectors; the effective value can be read off the result.
pub fn train_family(
    features: &FeatureSequence,
    max_bits: usize,
    config: &LbgConfig,
) -> Result<CodebookFamily, CodebookError> {
    if features.is_empty() {
        return Err(CodebookError::NoTrainingData);
    }
    let n = features.len();
    let mut max_bits = max_bits;
    while max_bits > 0 && (1usize << max_bits) > n {
        max_bits -= 1;
    }
    let dim = features.dim();
    let data = &features.vectors;

    // Size 0: global centroid.
    let mut centroid = vec![0.0f64; dim];
    for v in data {
        for (c, x) in centroid.iter_mut().zip(v) {
            *c += x;
        }
    }
    for c in &mut centroid {
        *c /= n as f64;
    }
    let mut codewords = vec![centroid];
    let mut codebooks = Vec::with_capacity(max_bits + 1);
    let d0 = mean_distortion(data, &codewords);
    codebooks.push(Codebook { bits: 0, codewords: codewords.clone(), training_distortion: d0 });

    for bits in 1..=max_bits {
        codewords = split_codewords(&codewords, config.split_epsilon);
        let distortion = lloyd(data, &mut codewords, config);
        codebooks.push(Codebook { bits, codewords: codewords.clone(), training_distortion: distortion });
    }
    Ok(CodebookFamily { codebooks })
}

fn split_codewords(codewords: &[Vec<f64>], epsilon: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(codewords.len() * 2);
    for w in codewords {
        out.push(w.iter().map(|x| x * (1.0 + epsilon)).collect());
        out.push(w.iter().map(|x| x * (1.0 - epsilon)).collect());
    }
    out
}

fn mean_distortion(data: &[Vec<f64>], codewords: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for v in data {
        let mut best = f64::INFINITY;
        for w in codewords {
            let d = squared_distance(v, w);
            if d < best {
                best = d;
            }
        }
        total += best;
    }
    total / data.len() as f64
}

/// Lloyd refinement: nearest-neighbor partition, centroid update, empty-cell
/// repair by re-splitting the most populous cell. Returns the training
/// distortion under the final codewords.
fn lloyd(data: &[Vec<f64>], codewords: &mut Vec<Vec<f64>>, config: &LbgConfig) -> f64 {
    let k = codewords.len();
    let dim = codewords[0].len();
    let mut assignment = vec![0usize; data.len()];
    let mut prev_distortion = f64::INFINITY;
    for _ in 0..config.max_iterations {
        // Partition.
        let mut distortion = 0.0;
        let mut counts = vec![0usize; k];
        for (vi, v) in data.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, w) in codewords.iter().enumerate() {
                let d = squared_distance(v, w);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            assignment[vi] = best;
            counts[best] += 1;
            distortion += best_d;
        }
        distortion /= data.len() as f64;
        debug_assert!(distortion <= prev_distortion + 1e-12);

        // Centroid update.
        let mut sums = vec![vec![0.0f64; dim]; k];
        for (vi, v) in data.iter().enumerate() {
            for (s, x) in sums[assignment[vi]].iter_mut().zip(v) {
                *s += x;
            }
        }
        for i in 0..k {
            if counts[i] > 0 {
                for (w, s) in codewords[i].iter_mut().zip(&sums[i]) {
                    *w = s / counts[i] as f64;
                }
            }
        }

        // Empty-cell repair: split off a perturbed copy of the most populous
        // cell's codeword. The donor stays put, so distortion cannot rise.
        let mut repairs = 0;
        for i in 0..k {
            if counts[i] == 0 {
                let donor = (0..k).max_by_key(|&j| counts[j]).unwrap();
                repairs += 1;
                let eps = config.split_epsilon * repairs as f64;
                codewords[i] = codewords[donor].iter().map(|x| x * (1.0 + eps)).collect();
            }
        }

        if prev_distortion.is_finite() {
            let improvement = (prev_distortion - distortion) / prev_distortion.max(f64::MIN_POSITIVE);
            if improvement < config.convergence_threshold {
                break;
            }
        }
        prev_distortion = distortion;
    }
    mean_distortion(data, codewords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{stream_rng, uniform_01};

    fn seq(vectors: Vec<Vec<f64>>) -> FeatureSequence {
        FeatureSequence::new(vectors)
    }

    #[test]
    fn degenerate_cluster() {
        let v = vec![0.5, -1.0, 2.0];
        let features = seq(vec![v.clone(); 40]);
        let family = train_family(&features, 3, &LbgConfig::default()).unwrap();
        for cb in &family.codebooks {
            assert_eq!(cb.codewords.len(), 1 << cb.bits);
            assert!(cb.training_distortion < 1e-20);
            // Repaired duplicate codewords sit within a few split
            // perturbations of the cluster point.
            for w in &cb.codewords {
                for (a, b) in w.iter().zip(&v) {
                    assert!((a - b).abs() < 0.2);
                }
            }
        }
    }

    #[test]
    fn two_clouds_match_brute_force_2_means() {
        let mut data = Vec::new();
        for i in 0..8 {
            let off = i as f64 * 0.01;
            data.push(vec![0.0 + off, 0.0]);
            data.push(vec![5.0 + off, 5.0]);
        }
        let features = seq(data.clone());
        let family = train_family(&features, 1, &LbgConfig::default()).unwrap();
        let cb = family.at(1);

        // Brute force 2-means: enumerate all 2^16 partitions.
        let n = data.len();
        let mut best = f64::INFINITY;
        let mut best_centroids = (vec![0.0; 2], vec![0.0; 2]);
        for mask in 1u32..(1 << n) - 1 {
            let mut sums = [vec![0.0; 2], vec![0.0; 2]];
            let mut counts = [0usize; 2];
            for (i, v) in data.iter().enumerate() {
                let g = ((mask >> i) & 1) as usize;
                counts[g] += 1;
                for (s, x) in sums[g].iter_mut().zip(v) {
                    *s += x;
                }
            }
            if counts[0] == 0 || counts[1] == 0 {
                continue;
            }
            let centroids: Vec<Vec<f64>> = (0..2)
                .map(|g| sums[g].iter().map(|s| s / counts[g] as f64).collect())
                .collect();
            let d = mean_distortion(&data, &centroids);
            if d < best {
                best = d;
                best_centroids = (centroids[0].clone(), centroids[1].clone());
            }
        }
        assert!((cb.training_distortion - best).abs() < 1e-9);
        let mut lbg: Vec<_> = cb.codewords.clone();
        lbg.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        let mut bf = vec![best_centroids.0, best_centroids.1];
        bf.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        for (a, b) in lbg.iter().zip(&bf) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn distortion_non_increasing_in_bits() {
        let mut rng = stream_rng(5, &[]);
        let data: Vec<Vec<f64>> =
            (0..300).map(|_| (0..4).map(|_| uniform_01(&mut rng)).collect()).collect();
        let family = train_family(&seq(data), 5, &LbgConfig::default()).unwrap();
        for w in family.codebooks.windows(2) {
            assert!(w[1].training_distortion <= w[0].training_distortion + 1e-12);
        }
    }

    #[test]
    fn max_bits_clamped_for_small_sets() {
        let data: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let family = train_family(&seq(data), 7, &LbgConfig::default()).unwrap();
        assert_eq!(family.max_bits(), 2); // 2^2 = 4 <= 5 < 8
    }

    #[test]
    fn quantize_examples() {
        let cb = Codebook {
            bits: 1,
            codewords: vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            training_distortion: 0.0,
        };
        assert_eq!(quantize(&[1.0, 1.0], &cb).unwrap(), (1, 0.0));
        let (i, d) = quantize(&[0.25, 0.25], &cb).unwrap();
        assert_eq!(i, 0);
        assert!((d - 0.125).abs() < 1e-15);
        // Equidistant: tie goes to index 0.
        assert_eq!(quantize(&[0.5, 0.5], &cb).unwrap().0, 0);
        assert!(matches!(
            quantize(&[0.5], &cb),
            Err(CodebookError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn avg_distortion_examples() {
        let cb = Codebook {
            bits: 0,
            codewords: vec![vec![0.0]],
            training_distortion: 0.0,
        };
        let s = seq(vec![vec![0.0], vec![0.0]]);
        assert_eq!(avg_distortion(&s, &cb).unwrap(), 0.0);
        let s = seq(vec![vec![0.2f64.sqrt()], vec![0.4f64.sqrt()]]);
        assert!((avg_distortion(&s, &cb).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(avg_distortion(&seq(vec![]), &cb), Err(CodebookError::EmptySequence));
    }

    #[test]
    fn normalization_rules() {
        assert!((normalize_distortion(0.6, 3, NormMode::PerBits) - 0.2).abs() < 1e-15);
        assert_eq!(normalize_distortion(0.6, 0, NormMode::PerBits), 0.6);
        assert_eq!(normalize_distortion(0.37, 5, NormMode::None), 0.37);
    }

    #[test]
    fn empty_training_set_errors() {
        assert_eq!(
            train_family(&seq(vec![]), 3, &LbgConfig::default()),
            Err(CodebookError::NoTrainingData)
        );
    }

    #[test]
    fn training_deterministic() {
        let mut rng = stream_rng(11, &[]);
        let data: Vec<Vec<f64>> =
            (0..128).map(|_| (0..3).map(|_| uniform_01(&mut rng)).collect()).collect();
        let features = seq(data);
        let a = train_family(&features, 4, &LbgConfig::default()).unwrap();
        let b = train_family(&features, 4, &LbgConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}

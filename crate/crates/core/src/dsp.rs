//! LPC-cepstrum front end for 8 kHz speech.
//!
//! Pipeline: first-order pre-emphasis, 30 ms Hamming-windowed frames with 2/3
//! overlap, autocorrelation, Levinson-Durbin, and the LPC-to-cepstrum
//! recursion. The LPC sign convention is `A(z) = 1 + sum a_k z^-k`; the
//! predictor output is `-sum a_k x[n-k]`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Sample rate every pipeline entry point requires. Inputs are never resampled.
pub const REQUIRED_SAMPLE_RATE: u32 = 8000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DspError {
    /// Empty input signal.
    EmptyInput,
    /// Frame autocorrelation has `r[0] <= 0`; the frame carries no energy.
    DegenerateFrame,
    /// A reflection coefficient left `[-1, 1]`; the autocorrelation sequence
    /// is not valid.
    UnstableRecursion,
    /// Every frame of the utterance was degenerate.
    NoFeatures,
    /// Signal sample rate differs from the required 8000 Hz.
    WrongSampleRate(u32),
}

impl fmt::Display for DspError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DspError::EmptyInput => write!(f, "empty input"),
            DspError::DegenerateFrame => write!(f, "degenerate frame"),
            DspError::UnstableRecursion => write!(f, "unstable recursion"),
            DspError::NoFeatures => write!(f, "no features extracted"),
            DspError::WrongSampleRate(sr) => {
                write!(f, "unsupported sample rate {sr}; expected 8000")
            }
        }
    }
}

impl core::error::Error for DspError {}

/// A mono audio signal with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        Signal { samples, sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// One analysis frame of `frame_len` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub samples: Vec<f64>,
}

/// A cepstral vector `c_1..c_p`. The gain term `c_0` is excluded.
pub type FeatureVector = Vec<f64>;

/// Ordered cepstral vectors extracted from one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub vectors: Vec<FeatureVector>,
    pub speaker_label: Option<String>,
    pub condition_label: Option<String>,
}

impl FeatureSequence {
    pub fn new(vectors: Vec<FeatureVector>) -> Self {
        FeatureSequence { vectors, speaker_label: None, condition_label: None }
    }

    /// Feature dimension, or 0 for an empty sequence.
    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Front-end parameters. Defaults follow the 8 kHz analysis setup: 0.95
/// pre-emphasis, 240-sample (30 ms) frames with 2/3 overlap, order-16 LPC.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontendConfig {
    pub preemphasis_alpha: f64,
    pub frame_len: usize,
    pub overlap_fraction: f64,
    pub lpc_order: usize,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        FrontendConfig {
            preemphasis_alpha: 0.95,
            frame_len: 240,
            overlap_fraction: 2.0 / 3.0,
            lpc_order: 16,
        }
    }
}

impl FrontendConfig {
    /// Frame advance in samples: `round(frame_len * (1 - overlap))`, at least 1.
    pub fn hop(&self) -> usize {
        let hop = libm::round(self.frame_len as f64 * (1.0 - self.overlap_fraction)) as usize;
        hop.max(1)
    }
}

/// First-order pre-emphasis `out[n] = in[n] - alpha * in[n-1]`, `out[0] = in[0]`.
pub fn preemphasize(signal: &Signal, alpha: f64) -> Result<Signal, DspError> {
    if signal.is_empty() {
        return Err(DspError::EmptyInput);
    }
    debug_assert!((0.0..1.0).contains(&alpha));
    let mut out = Vec::with_capacity(signal.len());
    out.push(signal.samples[0]);
    for n in 1..signal.len() {
        out.push(signal.samples[n] - alpha * signal.samples[n - 1]);
    }
    Ok(Signal::new(out, signal.sample_rate))
}

/// Splits a signal into frames starting at multiples of the hop. A trailing
/// segment shorter than `frame_len` is discarded; a signal shorter than one
/// frame yields no frames.
pub fn frame_signal(signal: &Signal, frame_len: usize, overlap_fraction: f64) -> Vec<Frame> {
    assert!(frame_len >= 2, "frame_len must be >= 2");
    assert!((0.0..1.0).contains(&overlap_fraction));
    let hop = (libm::round(frame_len as f64 * (1.0 - overlap_fraction)) as usize).max(1);
    let mut frames = Vec::new();
    let mut start = 0;
    while start + frame_len <= signal.len() {
        frames.push(Frame { samples: signal.samples[start..start + frame_len].to_vec() });
        start += hop;
    }
    frames
}

/// Pointwise Hamming window `0.54 - 0.46 cos(2 pi n / (L - 1))`.
pub fn apply_hamming(frame: &Frame) -> Frame {
    let len = frame.samples.len();
    assert!(len >= 2, "frame too short for windowing");
    let denom = (len - 1) as f64;
    let samples = frame
        .samples
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            let w = 0.54 - 0.46 * libm::cos(2.0 * core::f64::consts::PI * n as f64 / denom);
            x * w
        })
        .collect();
    Frame { samples }
}

/// Biased autocorrelation `r[k] = sum_{n=k}^{L-1} x[n] x[n-k]` for `k = 0..=max_lag`.
pub fn autocorrelate(frame: &Frame, max_lag: usize) -> Vec<f64> {
    assert!(max_lag < frame.samples.len(), "max_lag must be < frame length");
    let x = &frame.samples;
    (0..=max_lag)
        .map(|k| (k..x.len()).map(|n| x[n] * x[n - k]).sum())
        .collect()
}

/// Levinson-Durbin recursion. Returns the LPC coefficients `a_1..a_p` of
/// `A(z) = 1 + sum a_k z^-k` and the final prediction error.
pub fn levinson_durbin(r: &[f64], order: usize) -> Result<(Vec<f64>, f64), DspError> {
    assert!(r.len() > order, "need order + 1 autocorrelation lags");
    if r[0] <= 0.0 {
        return Err(DspError::DegenerateFrame);
    }
    const REFLECTION_TOL: f64 = 1e-9;
    let mut a = vec![0.0; order];
    let mut err = r[0];
    for m in 1..=order {
        let mut acc = r[m];
        for i in 1..m {
            acc += a[i - 1] * r[m - i];
        }
        let k = -acc / err;
        if libm::fabs(k) > 1.0 + REFLECTION_TOL {
            return Err(DspError::UnstableRecursion);
        }
        a[m - 1] = k;
        for i in 1..=(m - 1) / 2 {
            let tmp = a[i - 1] + k * a[m - 1 - i];
            a[m - 1 - i] += k * a[i - 1];
            a[i - 1] = tmp;
        }
        if m % 2 == 0 {
            let mid = m / 2;
            a[mid - 1] += k * a[mid - 1];
        }
        err *= 1.0 - k * k;
        if err < 0.0 {
            err = 0.0;
        }
    }
    Ok((a, err))
}

/// Cepstrum of the minimum-phase model `1/A(z)` from the LPC coefficients:
/// `c_1 = -a_1`, `c_n = -a_n - (1/n) sum_{k=1}^{n-1} k c_k a_{n-k}`.
pub fn lpc_to_cepstrum(lpc: &[f64], cepstral_order: usize) -> FeatureVector {
    let p = lpc.len();
    let a = |n: usize| if n >= 1 && n <= p { lpc[n - 1] } else { 0.0 };
    let mut c = Vec::with_capacity(cepstral_order);
    for n in 1..=cepstral_order {
        let mut acc = -a(n);
        for k in 1..n {
            acc -= (k as f64 / n as f64) * c[k - 1] * a(n - k);
        }
        c.push(acc);
    }
    c
}

/// Runs the whole front end on one utterance. Degenerate (silent) frames are
/// skipped; the skip count is returned alongside the features.
pub fn extract_features(
    signal: &Signal,
    config: &FrontendConfig,
) -> Result<(FeatureSequence, usize), DspError> {
    if signal.sample_rate != REQUIRED_SAMPLE_RATE {
        return Err(DspError::WrongSampleRate(signal.sample_rate));
    }
    if signal.is_empty() {
        return Err(DspError::EmptyInput);
    }
    let emphasized = preemphasize(signal, config.preemphasis_alpha)?;
    let frames = frame_signal(&emphasized, config.frame_len, config.overlap_fraction);
    let mut vectors = Vec::with_capacity(frames.len());
    let mut skipped = 0;
    for frame in &frames {
        let windowed = apply_hamming(frame);
        let r = autocorrelate(&windowed, config.lpc_order);
        match levinson_durbin(&r, config.lpc_order) {
            Ok((lpc, _)) => vectors.push(lpc_to_cepstrum(&lpc, config.lpc_order)),
            Err(DspError::DegenerateFrame) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if vectors.is_empty() {
        return Err(DspError::NoFeatures);
    }
    Ok((FeatureSequence::new(vectors), skipped))
}

//! Deterministic synthetic multi-speaker corpus generation.
//!
//! Each synthetic speaker is an order-16 all-pole filter parameterized by
//! reflection coefficients drawn uniformly from [-0.7, 0.7], which keeps every
//! filter stable by construction. Utterances are white Gaussian excitation
//! passed through the filter. The "mismatched" condition perturbs the
//! reflection coefficients once per speaker and adds observation noise at a
//! configured SNR, standing in for a train/test language mismatch.
//!
//! All randomness comes from ChaCha20 streams keyed by (master seed, speaker,
//! condition, stream id), so corpus builds are bit-identical across runs and
//! platforms.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::dsp::{Signal, REQUIRED_SAMPLE_RATE};

/// Stream id for training-utterance excitation.
pub const EXCITATION_TRAIN: u64 = 1;
/// Stream id for test-utterance excitation.
pub const EXCITATION_TEST: u64 = 2;
/// Stream id for the per-speaker mismatch filter jitter.
pub const FILTER_JITTER: u64 = 3;
/// Stream id for additive observation noise.
pub const OBSERVATION_NOISE: u64 = 4;

const SPEAKER_FILTER_STREAM: u64 = 0;
const MODEL_ORDER: usize = 16;
const REFLECTION_RANGE: f64 = 0.7;
const REFLECTION_CLIP: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthError {
    /// Requested duration yields less than one analysis frame.
    DurationTooShort,
    /// Spec has fewer than two speakers.
    TooFewSpeakers,
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::DurationTooShort => write!(f, "utterance duration yields no frames"),
            SynthError::TooFewSpeakers => write!(f, "need at least 2 speakers"),
        }
    }
}

impl core::error::Error for SynthError {}

/// Train/test condition of a synthesized utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    Train,
    Matched,
    Mismatched,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Condition::Train => "train",
            Condition::Matched => "test-matched",
            Condition::Mismatched => "test-mismatched",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "train" => Some(Condition::Train),
            "test-matched" => Some(Condition::Matched),
            "test-mismatched" => Some(Condition::Mismatched),
            _ => None,
        }
    }

    fn code(self) -> u64 {
        match self {
            Condition::Train => 0,
            Condition::Matched => 1,
            Condition::Mismatched => 2,
        }
    }
}

/// Synthetic corpus parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_speakers: usize,
    pub train_seconds: f64,
    pub n_test_sentences: usize,
    pub sentence_seconds: f64,
    pub master_seed: u64,
    /// Std of the Gaussian jitter applied to reflection coefficients in the
    /// mismatched condition.
    pub filter_jitter_std: f64,
    /// Observation SNR of the mismatched condition, in dB. `f64::INFINITY`
    /// disables the additive noise.
    pub snr_db: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_speakers: 10,
            train_seconds: 60.0,
            n_test_sentences: 5,
            sentence_seconds: 2.5,
            master_seed: 20240101,
            filter_jitter_std: 0.2,
            snr_db: 10.0,
        }
    }
}

/// An order-16 all-pole source filter for one synthetic speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerModel {
    pub reflection: Vec<f64>,
    /// Direct-form coefficients of `A(z) = 1 + sum a_k z^-k`.
    pub lpc: Vec<f64>,
}

impl SpeakerModel {
    /// Deterministic model for one speaker index under a master seed.
    pub fn generate(master_seed: u64, speaker: usize) -> Self {
        let mut rng = stream_rng(master_seed, &[SPEAKER_FILTER_STREAM, speaker as u64]);
        let reflection: Vec<f64> = (0..MODEL_ORDER)
            .map(|_| (uniform_01(&mut rng) * 2.0 - 1.0) * REFLECTION_RANGE)
            .collect();
        let lpc = step_up(&reflection);
        SpeakerModel { reflection, lpc }
    }

    /// The mismatched-condition variant: reflection coefficients jittered once
    /// per speaker, clipped to `|k| <= 0.95` so the filter stays stable.
    pub fn jittered(&self, master_seed: u64, speaker: usize, jitter_std: f64) -> Self {
        let mut rng = stream_rng(master_seed, &[FILTER_JITTER, speaker as u64]);
        let reflection: Vec<f64> = self
            .reflection
            .iter()
            .map(|&k| {
                let j = k + jitter_std * standard_normal(&mut rng);
                j.clamp(-REFLECTION_CLIP, REFLECTION_CLIP)
            })
            .collect();
        let lpc = step_up(&reflection);
        SpeakerModel { reflection, lpc }
    }
}

/// Reflection-to-direct-form step-up recursion for `A(z) = 1 + sum a_k z^-k`.
pub fn step_up(reflection: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = Vec::with_capacity(reflection.len());
    for (m, &k) in reflection.iter().enumerate() {
        let prev = a.clone();
        a.push(k);
        for i in 0..m {
            a[i] = prev[i] + k * prev[m - 1 - i];
        }
    }
    a
}

/// ChaCha20 stream keyed by the master seed and up to three stream words.
pub fn stream_rng(master_seed: u64, words: &[u64]) -> ChaCha20Rng {
    assert!(words.len() <= 3);
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&master_seed.to_le_bytes());
    for (i, w) in words.iter().enumerate() {
        key[8 + 8 * i..16 + 8 * i].copy_from_slice(&w.to_le_bytes());
    }
    ChaCha20Rng::from_seed(key)
}

/// Uniform draw in [0, 1) with 53 random bits.
pub fn uniform_01<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via Box-Muller; one draw per call.
pub fn standard_normal<R: RngCore>(rng: &mut R) -> f64 {
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = uniform_01(rng);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

/// Unit-variance white Gaussian excitation filtered through `1/A(z)`.
pub fn synth_signal(
    model: &SpeakerModel,
    n_samples: usize,
    master_seed: u64,
    speaker: usize,
    excitation_stream: u64,
    sentence: usize,
) -> Signal {
    let mut rng = stream_rng(
        master_seed,
        &[excitation_stream, speaker as u64, sentence as u64],
    );
    let mut out = vec![0.0f64; n_samples];
    for n in 0..n_samples {
        let mut y = standard_normal(&mut rng);
        for (k, &a) in model.lpc.iter().enumerate() {
            if n > k {
                y -= a * out[n - 1 - k];
            }
        }
        out[n] = y;
    }
    Signal::new(out, REQUIRED_SAMPLE_RATE)
}

/// One synthesized utterance with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub speaker: usize,
    pub condition: Condition,
    pub sentence: usize,
    pub signal: Signal,
}

impl Utterance {
    pub fn id(&self) -> alloc::string::String {
        use alloc::format;
        format!("spk{:02}_{}_{:02}", self.speaker, self.condition.label(), self.sentence)
    }
}

/// Synthesizes one utterance for speaker `speaker` under `condition`.
///
/// Matched and training utterances use the clean filter with fresh excitation.
/// Mismatched utterances use the per-speaker jittered filter plus white
/// observation noise at the configured SNR.
pub fn synth_speaker_utterance(
    spec: &SynthSpec,
    speaker: usize,
    condition: Condition,
    sentence: usize,
) -> Result<Utterance, SynthError> {
    let duration = match condition {
        Condition::Train => spec.train_seconds,
        _ => spec.sentence_seconds,
    };
    let n_samples = libm::round(duration * REQUIRED_SAMPLE_RATE as f64) as usize;
    if n_samples < 240 {
        return Err(SynthError::DurationTooShort);
    }
    let clean = SpeakerModel::generate(spec.master_seed, speaker);
    let excitation_stream = match condition {
        Condition::Train => EXCITATION_TRAIN,
        _ => EXCITATION_TEST,
    };
    // Distinct excitation per (condition, sentence) via the sentence word.
    let sentence_word = condition.code() * 1000 + sentence as u64;
    let signal = match condition {
        Condition::Mismatched => {
            let jittered = clean.jittered(spec.master_seed, speaker, spec.filter_jitter_std);
            let mut signal = synth_signal(
                &jittered,
                n_samples,
                spec.master_seed,
                speaker,
                excitation_stream,
                sentence_word as usize,
            );
            add_observation_noise(&mut signal, spec, speaker, sentence);
            signal
        }
        _ => synth_signal(
            &clean,
            n_samples,
            spec.master_seed,
            speaker,
            excitation_stream,
            sentence_word as usize,
        ),
    };
    Ok(Utterance { speaker, condition, sentence, signal })
}

fn add_observation_noise(signal: &mut Signal, spec: &SynthSpec, speaker: usize, sentence: usize) {
    if !spec.snr_db.is_finite() {
        return;
    }
    let n = signal.len();
    let power: f64 = signal.samples.iter().map(|x| x * x).sum::<f64>() / n as f64;
    let noise_std = libm::sqrt(power / libm::pow(10.0, spec.snr_db / 10.0));
    let mut rng = stream_rng(
        spec.master_seed,
        &[OBSERVATION_NOISE, speaker as u64, sentence as u64],
    );
    for x in &mut signal.samples {
        *x += noise_std * standard_normal(&mut rng);
    }
}

/// Builds the full corpus: per speaker one training utterance, then
/// `n_test_sentences` matched and mismatched test sentences. Deterministic
/// order: speakers ascending, conditions train/matched/mismatched, sentences
/// ascending.
pub fn build_corpus(spec: &SynthSpec) -> Result<Vec<Utterance>, SynthError> {
    if spec.n_speakers < 2 {
        return Err(SynthError::TooFewSpeakers);
    }
    let mut out = Vec::new();
    for speaker in 0..spec.n_speakers {
        out.push(synth_speaker_utterance(spec, speaker, Condition::Train, 0)?);
        for s in 0..spec.n_test_sentences {
            out.push(synth_speaker_utterance(spec, speaker, Condition::Matched, s)?);
        }
        for s in 0..spec.n_test_sentences {
            out.push(synth_speaker_utterance(spec, speaker, Condition::Mismatched, s)?);
        }
    }
    Ok(out)
}

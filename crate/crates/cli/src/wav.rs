//! Minimal RIFF/WAVE reader and writer: PCM, 16-bit, mono only.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use vqsid_core::dsp::Signal;

/// Reads a 16-bit mono PCM WAV. Samples are scaled to [-1, 1) by dividing by
/// 32768; the sample rate must be 8000 Hz (no resampling).
pub fn load_wav(path: &Path) -> Result<Signal> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_wav(&bytes).with_context(|| format!("loading {}", path.display()))
}

fn parse_wav(bytes: &[u8]) -> Result<Signal> {
    let header = |msg: &str| anyhow!("malformed WAV: {msg}");
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        bail!(header("missing RIFF/WAVE header"));
    }
    let mut pos = 12;
    let mut format: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| header("truncated chunk"))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    bail!(header("short fmt chunk"));
                }
                let audio_format = u16::from_le_bytes(body[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
                let sample_rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(body[14..16].try_into().unwrap());
                format = Some((audio_format, channels, sample_rate, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos = body_end + (size & 1); // chunks are word-aligned
    }
    let (audio_format, channels, sample_rate, bits) =
        format.ok_or_else(|| header("missing fmt chunk"))?;
    if audio_format != 1 {
        bail!("unsupported WAV encoding {audio_format}; expected PCM");
    }
    if channels != 1 {
        bail!("unsupported channel count {channels}; expected mono");
    }
    if bits != 16 {
        bail!("unsupported bit depth {bits}; expected 16");
    }
    if sample_rate != 8000 {
        bail!("unsupported sample rate {sample_rate}; expected 8000");
    }
    let data = data.ok_or_else(|| header("missing data chunk"))?;
    if data.len() % 2 != 0 {
        bail!(header("odd data chunk length"));
    }
    let samples = data
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
        .collect();
    Ok(Signal::new(samples, sample_rate))
}

/// Writes a 16-bit mono PCM WAV at the signal's sample rate. Samples are
/// scaled by 32768 and clamped to the i16 range.
pub fn encode_wav(signal: &Signal) -> Vec<u8> {
    let n = signal.len();
    let data_len = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&signal.sample_rate.to_le_bytes());
    out.extend_from_slice(&(signal.sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &x in &signal.samples {
        let s = (x * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Peak-normalizes to the given amplitude. Cepstral features are gain
/// invariant, so this only protects the 16-bit encoding from clipping.
pub fn peak_normalize(signal: &Signal, peak: f64) -> Signal {
    let max = signal.samples.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if max == 0.0 {
        return signal.clone();
    }
    let scale = peak / max;
    Signal::new(signal.samples.iter().map(|x| x * scale).collect(), signal.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(samples: Vec<f64>) -> Signal {
        parse_wav(&encode_wav(&Signal::new(samples, 8000))).unwrap()
    }

    #[test]
    fn scaling_rule() {
        let sig = roundtrip(vec![0.0, 0.5, -1.0]);
        assert_eq!(sig.samples, vec![0.0, 0.5, -1.0]);
    }

    #[test]
    fn written_fixture_roundtrips_exactly() {
        // Any value on the 1/32768 grid survives encode/decode unchanged.
        let samples: Vec<f64> = (-8..8).map(|i| i as f64 * 129.0 / 32768.0).collect();
        assert_eq!(roundtrip(samples.clone()).samples, samples);
    }

    #[test]
    fn wrong_sample_rate_rejected() {
        let bytes = encode_wav(&Signal::new(vec![0.0], 44_100));
        let err = parse_wav(&bytes).unwrap_err();
        assert_eq!(err.to_string(), "unsupported sample rate 44100; expected 8000");
    }

    #[test]
    fn truncated_header_rejected() {
        let mut bytes = encode_wav(&Signal::new(vec![0.0; 4], 8000));
        bytes.truncate(20);
        let err = parse_wav(&bytes).unwrap_err();
        assert!(err.to_string().starts_with("malformed WAV"), "{err}");
    }

    #[test]
    fn stereo_rejected() {
        let mut bytes = encode_wav(&Signal::new(vec![0.0; 4], 8000));
        bytes[22] = 2; // channel count
        assert!(parse_wav(&bytes).unwrap_err().to_string().contains("mono"));
    }
}

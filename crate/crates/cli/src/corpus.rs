//! Corpus and feature-cache file formats.
//!
//! A corpus manifest is a CSV of (utterance_id, speaker, condition, path)
//! rows with paths relative to the manifest's directory. The feature cache
//! stores one CSV per utterance (one row per frame, columns c1..cp) plus a
//! manifest that adds the frame count.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use vqsid_core::dsp::{extract_features, FeatureSequence, FrontendConfig};
use vqsid_core::synth::{build_corpus, Condition, SynthSpec};

use crate::output::{csv_row, fmt_f64, OutputWriter};
use crate::wav;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub utterance_id: String,
    pub speaker: String,
    pub condition: Condition,
    pub path: PathBuf,
}

/// Synthesizes the corpus and writes WAVs plus `manifest.csv` under `dir`.
pub fn write_synth_corpus(spec: &SynthSpec, dir: &Path, out: &mut OutputWriter) -> Result<()> {
    let utterances = build_corpus(spec)?;
    let mut manifest = String::from("utterance_id,speaker,condition,path\n");
    for u in &utterances {
        let id = u.id();
        let file = format!("{id}.wav");
        let normalized = wav::peak_normalize(&u.signal, 0.97);
        out.write(&dir.join(&file), &wav::encode_wav(&normalized))?;
        manifest.push_str(&csv_row([
            id.as_str(),
            &format!("spk{:02}", u.speaker),
            u.condition.label(),
            &file,
        ]));
    }
    out.write(&dir.join("manifest.csv"), manifest.as_bytes())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading manifest {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue; // header
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 4 {
            bail!("malformed manifest row {} in {}", lineno + 1, path.display());
        }
        let condition = Condition::from_label(fields[2])
            .with_context(|| format!("manifest row {}: unknown condition {}", lineno + 1, fields[2]))?;
        entries.push(ManifestEntry {
            utterance_id: fields[0].to_string(),
            speaker: fields[1].to_string(),
            condition,
            path: base.join(fields[3]),
        });
    }
    Ok(entries)
}

/// Extracts features for every manifest entry and writes the cache under
/// `features_dir`. Degenerate-frame skips are reported, not fatal.
pub fn write_feature_cache(
    entries: &[ManifestEntry],
    frontend: &FrontendConfig,
    features_dir: &Path,
    out: &mut OutputWriter,
) -> Result<usize> {
    let mut manifest = String::from("utterance_id,speaker,condition,path,n_frames\n");
    let mut total_skipped = 0;
    for entry in entries {
        let signal = wav::load_wav(&entry.path)?;
        let (features, skipped) = extract_features(&signal, frontend)
            .with_context(|| format!("extracting {}", entry.utterance_id))?;
        total_skipped += skipped;
        let file = format!("{}.csv", entry.utterance_id);
        let mut body = String::new();
        body.push_str(&csv_row(
            (1..=features.dim()).map(|i| format!("c{i}")).collect::<Vec<_>>(),
        ));
        for v in &features.vectors {
            body.push_str(&csv_row(v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>()));
        }
        out.write(&features_dir.join(&file), body.as_bytes())?;
        manifest.push_str(&csv_row([
            entry.utterance_id.as_str(),
            &entry.speaker,
            entry.condition.label(),
            &file,
            &features.len().to_string(),
        ]));
    }
    out.write(&features_dir.join("manifest.csv"), manifest.as_bytes())?;
    Ok(total_skipped)
}

/// One cached utterance with its features loaded.
#[derive(Debug, Clone)]
pub struct CachedUtterance {
    pub utterance_id: String,
    pub speaker: String,
    pub condition: Condition,
    pub features: FeatureSequence,
}

pub fn read_feature_cache(manifest_path: &Path) -> Result<Vec<CachedUtterance>> {
    let entries = read_manifest(manifest_path)?;
    let mut out = Vec::with_capacity(entries.len());
    for entry in entries {
        let text = fs::read_to_string(&entry.path)
            .with_context(|| format!("reading features {}", entry.path.display()))?;
        let mut vectors = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> = line.split(',').map(str::parse).collect();
            let row = row.with_context(|| {
                format!("bad feature row {} in {}", lineno + 1, entry.path.display())
            })?;
            vectors.push(row);
        }
        let mut features = FeatureSequence::new(vectors);
        features.speaker_label = Some(entry.speaker.clone());
        features.condition_label = Some(entry.condition.label().to_string());
        out.push(CachedUtterance {
            utterance_id: entry.utterance_id,
            speaker: entry.speaker,
            condition: entry.condition,
            features,
        });
    }
    Ok(out)
}

/// Test sequences of one condition, ordered by (speaker, utterance id).
pub fn test_set(cache: &[CachedUtterance], condition: Condition) -> Vec<FeatureSequence> {
    let mut selected: Vec<&CachedUtterance> =
        cache.iter().filter(|u| u.condition == condition).collect();
    selected.sort_by(|a, b| (&a.speaker, &a.utterance_id).cmp(&(&b.speaker, &b.utterance_id)));
    selected.into_iter().map(|u| u.features.clone()).collect()
}

/// Training features per speaker, concatenated over the speaker's training
/// utterances, ordered by speaker label.
pub fn training_sets(cache: &[CachedUtterance]) -> Vec<(String, FeatureSequence)> {
    let mut speakers: Vec<&str> = cache
        .iter()
        .filter(|u| u.condition == Condition::Train)
        .map(|u| u.speaker.as_str())
        .collect();
    speakers.sort_unstable();
    speakers.dedup();
    speakers
        .into_iter()
        .map(|speaker| {
            let mut vectors = Vec::new();
            for u in cache {
                if u.condition == Condition::Train && u.speaker == speaker {
                    vectors.extend(u.features.vectors.iter().cloned());
                }
            }
            let mut seq = FeatureSequence::new(vectors);
            seq.speaker_label = Some(speaker.to_string());
            (speaker.to_string(), seq)
        })
        .collect()
}

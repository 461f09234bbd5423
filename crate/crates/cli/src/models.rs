//! Codebook persistence: one text file per speaker.
//!
//! Layout (all CSV rows):
//!   version,1
//!   speaker,<id>
//!   p,<dimension>
//!   max_bits,<B>
//!   distortion,<bits>,<training distortion>   (one per size)
//!   bits,codeword_index,c1,...,cp             (header)
//!   <bits>,<index>,<c1>,...,<cp>              (one per codeword)

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use vqsid_core::codebook::{Codebook, CodebookFamily};
use vqsid_core::identify::ModelBank;

use crate::output::{csv_row, fmt_f64, OutputWriter};

const FORMAT_VERSION: &str = "1";

pub fn write_family(
    speaker: &str,
    family: &CodebookFamily,
    path: &Path,
    out: &mut OutputWriter,
) -> Result<()> {
    let p = family.dim();
    let mut body = String::new();
    body.push_str(&csv_row(["version", FORMAT_VERSION]));
    body.push_str(&csv_row(["speaker", speaker]));
    body.push_str(&csv_row(["p", &p.to_string()]));
    body.push_str(&csv_row(["max_bits", &family.max_bits().to_string()]));
    for cb in &family.codebooks {
        body.push_str(&csv_row([
            "distortion",
            &cb.bits.to_string(),
            &fmt_f64(cb.training_distortion),
        ]));
    }
    let mut header = vec!["bits".to_string(), "codeword_index".to_string()];
    header.extend((1..=p).map(|i| format!("c{i}")));
    body.push_str(&csv_row(header));
    for cb in &family.codebooks {
        for (i, w) in cb.codewords.iter().enumerate() {
            let mut row = vec![cb.bits.to_string(), i.to_string()];
            row.extend(w.iter().map(|&x| fmt_f64(x)));
            body.push_str(&csv_row(row));
        }
    }
    out.write(path, body.as_bytes())
}

pub fn read_family(path: &Path) -> Result<(String, CodebookFamily)> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    let mut speaker = None;
    let mut p = None;
    let mut max_bits = None;
    let mut distortions: Vec<(usize, f64)> = Vec::new();
    let mut rows: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    let mut in_codewords = false;
    for (lineno, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let ctx = || format!("model {} row {}", path.display(), lineno + 1);
        match fields[0] {
            "version" => {
                if fields.get(1) != Some(&FORMAT_VERSION) {
                    bail!("unsupported model format version in {}", path.display());
                }
            }
            "speaker" => speaker = Some(fields[1].to_string()),
            "p" => p = Some(fields[1].parse::<usize>().with_context(ctx)?),
            "max_bits" => max_bits = Some(fields[1].parse::<usize>().with_context(ctx)?),
            "distortion" => {
                let bits = fields[1].parse::<usize>().with_context(ctx)?;
                let d = fields[2].parse::<f64>().with_context(ctx)?;
                distortions.push((bits, d));
            }
            "bits" => in_codewords = true, // column header
            _ if in_codewords => {
                let bits = fields[0].parse::<usize>().with_context(ctx)?;
                let idx = fields[1].parse::<usize>().with_context(ctx)?;
                let coeffs: Vec<f64> = fields[2..]
                    .iter()
                    .map(|f| f.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .with_context(ctx)?;
                rows.push((bits, idx, coeffs));
            }
            _ => bail!("unexpected row in {}: {line}", path.display()),
        }
    }
    let speaker = speaker.context("model file missing speaker")?;
    let p = p.context("model file missing p")?;
    let max_bits = max_bits.context("model file missing max_bits")?;
    let mut codebooks = Vec::with_capacity(max_bits + 1);
    for bits in 0..=max_bits {
        let mut codewords: Vec<(usize, Vec<f64>)> = rows
            .iter()
            .filter(|(b, _, _)| *b == bits)
            .map(|(_, i, c)| (*i, c.clone()))
            .collect();
        codewords.sort_by_key(|(i, _)| *i);
        if codewords.len() != 1 << bits {
            bail!(
                "model {}: size {bits} has {} codewords, expected {}",
                path.display(),
                codewords.len(),
                1usize << bits
            );
        }
        if codewords.iter().any(|(_, c)| c.len() != p) {
            bail!("model {}: codeword dimension mismatch at size {bits}", path.display());
        }
        let training_distortion = distortions
            .iter()
            .find(|(b, _)| *b == bits)
            .map(|(_, d)| *d)
            .with_context(|| format!("model {}: missing distortion for size {bits}", path.display()))?;
        codebooks.push(Codebook {
            bits,
            codewords: codewords.into_iter().map(|(_, c)| c).collect(),
            training_distortion,
        });
    }
    Ok((speaker, CodebookFamily { codebooks }))
}

/// Loads every `.cbk` file in a directory into a bank, speakers ordered by
/// label.
pub fn load_bank(models_dir: &Path) -> Result<ModelBank> {
    let mut paths: Vec<_> = fs::read_dir(models_dir)
        .with_context(|| format!("reading models dir {}", models_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "cbk"))
        .collect();
    paths.sort();
    if paths.len() < 2 {
        bail!("need at least 2 speaker models in {}", models_dir.display());
    }
    let mut speakers = Vec::new();
    let mut families = Vec::new();
    for path in paths {
        let (speaker, family) = read_family(&path)?;
        speakers.push(speaker);
        families.push(family);
    }
    Ok(ModelBank::new(speakers, families))
}

/// Size assignments as CSV: header then (speaker, bits) rows in bank order.
pub fn write_assignment(
    speakers: &[String],
    bits: &[usize],
    path: &Path,
    out: &mut OutputWriter,
) -> Result<()> {
    let mut body = String::from("speaker,bits\n");
    for (s, b) in speakers.iter().zip(bits) {
        body.push_str(&csv_row([s.as_str(), &b.to_string()]));
    }
    out.write(path, body.as_bytes())
}

/// Reads an assignment CSV and orders it against the bank's speakers.
pub fn read_assignment(path: &Path, bank: &ModelBank) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading assignment {}", path.display()))?;
    let mut bits = vec![None; bank.len()];
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let (speaker, b) = line
            .split_once(',')
            .with_context(|| format!("malformed assignment row {}", lineno + 1))?;
        let idx = bank
            .index_of(speaker)
            .with_context(|| format!("assignment row {}: unknown speaker {speaker}", lineno + 1))?;
        bits[idx] = Some(
            b.trim()
                .parse::<usize>()
                .with_context(|| format!("assignment row {}: bad bits", lineno + 1))?,
        );
    }
    bits.into_iter()
        .enumerate()
        .map(|(i, b)| b.with_context(|| format!("assignment missing speaker {}", bank.speakers[i])))
        .collect()
}

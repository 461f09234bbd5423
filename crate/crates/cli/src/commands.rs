//! The CLI subcommands. Each takes the merged configuration, reads its
//! inputs, and emits CSV reports named after the figures they regenerate.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use vqsid_core::codebook::train_family;
use vqsid_core::dsp::FeatureSequence;
use vqsid_core::identify::{
    distortion_histogram, distortion_stats, evaluate, ModelBank, SizeAssignment,
};
use vqsid_core::size_select::{
    greedy_size_search, mean_bits, per_speaker_sweep, ratio_criterion_assign,
};
use vqsid_core::synth::Condition;

use crate::config::{ExperimentConfig, SplitPolicy};
use crate::corpus::{
    read_feature_cache, read_manifest, test_set, training_sets, write_feature_cache,
    write_synth_corpus, CachedUtterance,
};
use crate::models::{load_bank, read_assignment, write_assignment, write_family};
use crate::output::{csv_row, fmt_f64, OutputWriter};

pub fn cmd_synth(config: &ExperimentConfig, out: &mut OutputWriter) -> Result<()> {
    write_synth_corpus(&config.synth, &config.corpus_dir(), out)
}

pub fn cmd_extract(
    config: &ExperimentConfig,
    manifest: Option<&Path>,
    out: &mut OutputWriter,
) -> Result<()> {
    let manifest = manifest
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.corpus_dir().join("manifest.csv"));
    let entries = read_manifest(&manifest)?;
    if entries.is_empty() {
        bail!("manifest {} lists no utterances", manifest.display());
    }
    let skipped =
        write_feature_cache(&entries, &config.frontend, &config.features_dir(), out)?;
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} degenerate frames");
    }
    Ok(())
}

pub fn cmd_train(
    config: &ExperimentConfig,
    manifest: Option<&Path>,
    max_bits: Option<usize>,
    out: &mut OutputWriter,
) -> Result<()> {
    let manifest = manifest
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.features_dir().join("manifest.csv"));
    let max_bits = max_bits.unwrap_or(config.max_bits);
    let cache = read_feature_cache(&manifest)?;
    let speakers = training_sets(&cache);
    if speakers.is_empty() {
        bail!("no training utterances in {}", manifest.display());
    }
    for (speaker, features) in &speakers {
        let family = train_family(features, max_bits, &config.lbg)?;
        if family.max_bits() < max_bits {
            eprintln!(
                "warning: speaker {speaker}: only {} training vectors, max_bits clamped to {}",
                features.len(),
                family.max_bits()
            );
        }
        write_family(speaker, &family, &config.models_dir().join(format!("{speaker}.cbk")), out)?;
    }
    Ok(())
}

pub struct EvalInputs {
    pub bank: ModelBank,
    pub cache: Vec<CachedUtterance>,
}

pub fn load_eval_inputs(
    config: &ExperimentConfig,
    models: Option<&Path>,
    features: Option<&Path>,
) -> Result<EvalInputs> {
    let models_dir =
        models.map(Path::to_path_buf).unwrap_or_else(|| config.models_dir());
    let manifest = features
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.features_dir().join("manifest.csv"));
    let bank = load_bank(&models_dir)?;
    let cache = read_feature_cache(&manifest)?;
    for u in &cache {
        if u.condition != Condition::Train && bank.index_of(&u.speaker).is_none() {
            bail!("test utterance {} names unknown speaker {}", u.utterance_id, u.speaker);
        }
    }
    Ok(EvalInputs { bank, cache })
}

/// Splits one condition's sentences into tuning and scoring sets according to
/// the split policy. Sentences are grouped per speaker; under the disjoint
/// policy even indices tune and odd indices score.
pub fn tuning_scoring_split(
    sentences: &[FeatureSequence],
    policy: SplitPolicy,
) -> (Vec<FeatureSequence>, Vec<FeatureSequence>) {
    match policy {
        SplitPolicy::Shared => (sentences.to_vec(), sentences.to_vec()),
        SplitPolicy::Disjoint => {
            let mut tuning = Vec::new();
            let mut scoring = Vec::new();
            let mut per_speaker: BTreeMap<&str, usize> = BTreeMap::new();
            for seq in sentences {
                let speaker = seq.speaker_label.as_deref().unwrap_or("");
                let idx = per_speaker.entry(speaker).or_insert(0);
                if *idx % 2 == 0 {
                    tuning.push(seq.clone());
                } else {
                    scoring.push(seq.clone());
                }
                *idx += 1;
            }
            (tuning, scoring)
        }
    }
}

fn condition_test_set(
    inputs: &EvalInputs,
    condition: Condition,
) -> Result<Vec<FeatureSequence>> {
    let set = test_set(&inputs.cache, condition);
    if set.is_empty() {
        bail!("no {} utterances in the feature cache", condition.label());
    }
    Ok(set)
}

pub fn cmd_sweep(
    config: &ExperimentConfig,
    models: Option<&Path>,
    features: Option<&Path>,
    out: &mut OutputWriter,
) -> Result<()> {
    let inputs = load_eval_inputs(config, models, features)?;
    let bits_range: Vec<usize> = (0..=inputs.bank.max_bits()).collect();
    for (condition, rates_file, hist_file) in [
        (Condition::Matched, "fig1.csv", "fig2.csv"),
        (Condition::Mismatched, "fig3.csv", "fig4.csv"),
    ] {
        let set = match condition_test_set(&inputs, condition) {
            Ok(set) => set,
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", condition.label());
                continue;
            }
        };
        let sweep = per_speaker_sweep(&inputs.bank, &set, &bits_range, config.norm_mode)?;
        let mut rates = String::from("speaker,bits,rate\n");
        for (s, speaker) in inputs.bank.speakers.iter().enumerate() {
            for (bi, &b) in sweep.bits.iter().enumerate() {
                rates.push_str(&csv_row([
                    speaker.as_str(),
                    &b.to_string(),
                    &fmt_f64(sweep.rates[s][bi]),
                ]));
            }
        }
        out.write(&config.out_dir.join(rates_file), rates.as_bytes())?;
        let mut hist = String::from("bits,count\n");
        for (bi, &b) in sweep.bits.iter().enumerate() {
            hist.push_str(&csv_row([b.to_string(), sweep.histogram[bi].to_string()]));
        }
        out.write(&config.out_dir.join(hist_file), hist.as_bytes())?;
    }
    Ok(())
}

pub fn cmd_greedy(
    config: &ExperimentConfig,
    init_bits: Option<usize>,
    condition: Option<Condition>,
    models: Option<&Path>,
    features: Option<&Path>,
    out: &mut OutputWriter,
) -> Result<()> {
    let inputs = load_eval_inputs(config, models, features)?;
    let init_bits = init_bits.unwrap_or(config.init_bits);
    let condition = condition.unwrap_or(config.tuning_condition);
    let set = condition_test_set(&inputs, condition)?;
    let (tuning, scoring) = tuning_scoring_split(&set, config.split_policy);
    let max_bits = inputs.bank.max_bits();
    if init_bits > max_bits {
        bail!("init_bits {init_bits} exceeds the bank's max_bits {max_bits}");
    }
    let trace =
        greedy_size_search(&inputs.bank, &tuning, init_bits, max_bits, config.norm_mode)?;

    let mut trace_csv = String::from("iteration,speaker,new_bits,overall_rate,mean_bits\n");
    for (i, step) in trace.steps.iter().enumerate() {
        trace_csv.push_str(&csv_row([
            (i + 1).to_string(),
            inputs.bank.speakers[step.speaker].clone(),
            step.new_bits.to_string(),
            fmt_f64(step.overall_rate),
            fmt_f64(step.mean_bits),
        ]));
    }
    out.write(&config.out_dir.join("greedy_trace.csv"), trace_csv.as_bytes())?;

    let mut fig5 = String::from("mode,mean_bits,overall_rate\n");
    let n = inputs.bank.len();
    for b in 0..=max_bits {
        let report =
            evaluate(&scoring, &inputs.bank, &SizeAssignment::uniform(n, b), config.norm_mode)?;
        fig5.push_str(&csv_row([
            "fixed".to_string(),
            fmt_f64(b as f64),
            fmt_f64(report.overall_rate()),
        ]));
    }
    let variable_report =
        evaluate(&scoring, &inputs.bank, &trace.assignment, config.norm_mode)?;
    fig5.push_str(&csv_row([
        "variable".to_string(),
        fmt_f64(mean_bits(&trace.assignment)),
        fmt_f64(variable_report.overall_rate()),
    ]));
    out.write(&config.out_dir.join("fig5.csv"), fig5.as_bytes())?;
    write_assignment(
        &inputs.bank.speakers,
        &trace.assignment.bits,
        &config.out_dir.join("assignment_greedy.csv"),
        out,
    )
}

pub fn cmd_ratio(
    config: &ExperimentConfig,
    theta: Option<f64>,
    base_bits: Option<usize>,
    condition: Option<Condition>,
    models: Option<&Path>,
    features: Option<&Path>,
    out: &mut OutputWriter,
) -> Result<()> {
    let inputs = load_eval_inputs(config, models, features)?;
    let theta = theta.unwrap_or(config.theta);
    let base_bits = base_bits.unwrap_or(config.base_bits);
    let condition = condition.unwrap_or(config.tuning_condition);
    let max_bits = inputs.bank.max_bits();
    if base_bits >= max_bits {
        bail!("base_bits {base_bits} must be below the bank's max_bits {max_bits}");
    }

    // fig9: std/mean ratio per speaker and size, for every condition present.
    let mut fig9 = String::from("speaker,bits,ratio,condition\n");
    for cond in [Condition::Matched, Condition::Mismatched] {
        let set = test_set(&inputs.cache, cond);
        if set.is_empty() {
            continue;
        }
        for bits in 0..=max_bits {
            let stats = distortion_stats(
                &inputs.bank,
                &SizeAssignment::uniform(inputs.bank.len(), bits),
                &set,
            )?;
            for s in &stats {
                fig9.push_str(&csv_row([
                    s.speaker.clone(),
                    bits.to_string(),
                    fmt_f64(s.ratio),
                    cond.label().to_string(),
                ]));
            }
        }
    }
    out.write(&config.out_dir.join("fig9.csv"), fig9.as_bytes())?;

    let set = condition_test_set(&inputs, condition)?;
    let (tuning, scoring) = tuning_scoring_split(&set, config.split_policy);
    let selection =
        ratio_criterion_assign(&inputs.bank, &tuning, base_bits, theta, config.norm_mode)?;
    for speaker in &selection.degenerate_speakers {
        eprintln!("warning: speaker {speaker} has zero self-distortion; kept at base size");
    }

    let mut fig10 = String::from("mean_bits,overall_rate,mode\n");
    let n = inputs.bank.len();
    for b in 0..=max_bits {
        let report =
            evaluate(&scoring, &inputs.bank, &SizeAssignment::uniform(n, b), config.norm_mode)?;
        fig10.push_str(&csv_row([
            fmt_f64(b as f64),
            fmt_f64(report.overall_rate()),
            "fixed".to_string(),
        ]));
    }
    let report = evaluate(&scoring, &inputs.bank, &selection.assignment, config.norm_mode)?;
    fig10.push_str(&csv_row([
        fmt_f64(mean_bits(&selection.assignment)),
        fmt_f64(report.overall_rate()),
        "variable".to_string(),
    ]));
    out.write(&config.out_dir.join("fig10.csv"), fig10.as_bytes())?;
    write_assignment(
        &inputs.bank.speakers,
        &selection.assignment.bits,
        &config.out_dir.join("assignment_ratio.csv"),
        out,
    )
}

pub fn cmd_stats(
    config: &ExperimentConfig,
    condition: Option<Condition>,
    models: Option<&Path>,
    features: Option<&Path>,
    out: &mut OutputWriter,
) -> Result<()> {
    let inputs = load_eval_inputs(config, models, features)?;
    let condition = condition.unwrap_or(config.tuning_condition);
    let max_bits = inputs.bank.max_bits();

    let mut fig6 = String::from("bits,mean_training_distortion\n");
    for bits in 0..=max_bits {
        let mean: f64 = inputs
            .bank
            .families
            .iter()
            .map(|f| f.at(bits).training_distortion)
            .sum::<f64>()
            / inputs.bank.len() as f64;
        fig6.push_str(&csv_row([bits.to_string(), fmt_f64(mean)]));
    }
    out.write(&config.out_dir.join("fig6.csv"), fig6.as_bytes())?;

    let set = condition_test_set(&inputs, condition)?;
    let mut fig7_8 = String::from("bits,bin_low,bin_high,count\n");
    for bits in 0..=max_bits {
        let bins = distortion_histogram(&inputs.bank, &set, bits, config.histogram_bins)?;
        for bin in bins {
            fig7_8.push_str(&csv_row([
                bits.to_string(),
                fmt_f64(bin.low),
                fmt_f64(bin.high),
                bin.count.to_string(),
            ]));
        }
    }
    out.write(&config.out_dir.join("fig7_8.csv"), fig7_8.as_bytes())
}

pub fn cmd_evaluate(
    config: &ExperimentConfig,
    assignment_path: &Path,
    condition: Option<Condition>,
    models: Option<&Path>,
    features: Option<&Path>,
    out: &mut OutputWriter,
) -> Result<()> {
    let inputs = load_eval_inputs(config, models, features)?;
    let condition = condition.unwrap_or(config.tuning_condition);
    let bits = read_assignment(assignment_path, &inputs.bank)?;
    let assignment = SizeAssignment { bits };
    let set = condition_test_set(&inputs, condition)?;
    let report = evaluate(&set, &inputs.bank, &assignment, config.norm_mode)?;
    for speaker in &report.untested_speakers {
        eprintln!("warning: speaker {speaker} has no test sentences; excluded from rates");
    }

    let mut body = String::from("speaker,n_test,n_correct,rate\n");
    for (i, speaker) in report.speakers.iter().enumerate() {
        if report.n_test[i] == 0 {
            continue;
        }
        body.push_str(&csv_row([
            speaker.clone(),
            report.n_test[i].to_string(),
            report.n_correct[i].to_string(),
            fmt_f64(report.per_speaker_rate(i)),
        ]));
    }
    body.push_str(&csv_row([
        "overall".to_string(),
        report.n_test.iter().sum::<usize>().to_string(),
        report.n_correct.iter().sum::<usize>().to_string(),
        fmt_f64(report.overall_rate()),
    ]));
    out.write(&config.out_dir.join("report.csv"), body.as_bytes())?;

    let mut confusion = String::from("speaker");
    for s in &report.speakers {
        confusion.push(',');
        confusion.push_str(s);
    }
    confusion.push('\n');
    for (i, speaker) in report.speakers.iter().enumerate() {
        let mut row = vec![speaker.clone()];
        row.extend(report.confusion[i].iter().map(usize::to_string));
        confusion.push_str(&csv_row(row));
    }
    out.write(&config.out_dir.join("confusion.csv"), confusion.as_bytes())
}

/// Resolves the output directory: flag > VQSID_OUT_DIR > config > default.
pub fn resolve_out_dir(flag: Option<PathBuf>, config: &mut ExperimentConfig) {
    if let Some(dir) = flag {
        config.out_dir = dir;
    } else if let Ok(dir) = std::env::var("VQSID_OUT_DIR") {
        if !dir.is_empty() {
            config.out_dir = PathBuf::from(dir);
        }
    }
}

/// Loads the config file (when given) and applies output-directory overrides.
pub fn load_config(config_path: Option<&Path>, out_dir: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut config = match config_path {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    resolve_out_dir(out_dir, &mut config);
    Ok(config)
}

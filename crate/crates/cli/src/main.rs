use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use vqsid::commands;
use vqsid::config::parse_condition;
use vqsid::output::OutputWriter;

/// VQ-codebook speaker identification with per-speaker model sizes.
#[derive(Parser)]
#[command(name = "vqsid", version)]
struct Cli {
    /// Experiment configuration file (key = value lines).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides VQSID_OUT_DIR and the config file).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic WAV corpus and its manifest.
    Synth,
    /// Extract cepstral features for every utterance in a corpus manifest.
    Extract {
        /// Corpus manifest (default: <out>/corpus/manifest.csv).
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Train per-speaker codebook families from cached features.
    Train {
        /// Feature manifest (default: <out>/features/manifest.csv).
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        max_bits: Option<usize>,
    },
    /// Per-speaker identification-rate sweep over common model sizes
    /// (fig1-fig4).
    Sweep {
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Greedy one-bit-at-a-time size search (fig5, greedy_trace).
    Greedy {
        #[arg(long)]
        init_bits: Option<usize>,
        /// Tuning condition: matched|mismatched.
        #[arg(long)]
        condition: Option<String>,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Single-pass std/mean ratio criterion (fig9, fig10).
    Ratio {
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        base_bits: Option<usize>,
        #[arg(long)]
        condition: Option<String>,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Training-distortion curve and distortion histograms (fig6, fig7_8).
    Stats {
        #[arg(long)]
        condition: Option<String>,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Identification report for a given size assignment (report, confusion).
    Evaluate {
        #[arg(long)]
        assignment: PathBuf,
        #[arg(long)]
        condition: Option<String>,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
    },
}

fn run(cli: Cli, out: &mut OutputWriter) -> Result<()> {
    let config = commands::load_config(cli.config.as_deref(), cli.out_dir)?;
    match cli.command {
        Command::Synth => commands::cmd_synth(&config, out),
        Command::Extract { manifest } => {
            commands::cmd_extract(&config, manifest.as_deref(), out)
        }
        Command::Train { manifest, max_bits } => {
            commands::cmd_train(&config, manifest.as_deref(), max_bits, out)
        }
        Command::Sweep { models, features } => {
            commands::cmd_sweep(&config, models.as_deref(), features.as_deref(), out)
        }
        Command::Greedy { init_bits, condition, models, features } => {
            let condition = condition.as_deref().map(parse_condition).transpose()?;
            commands::cmd_greedy(
                &config,
                init_bits,
                condition,
                models.as_deref(),
                features.as_deref(),
                out,
            )
        }
        Command::Ratio { theta, base_bits, condition, models, features } => {
            let condition = condition.as_deref().map(parse_condition).transpose()?;
            commands::cmd_ratio(
                &config,
                theta,
                base_bits,
                condition,
                models.as_deref(),
                features.as_deref(),
                out,
            )
        }
        Command::Stats { condition, models, features } => {
            let condition = condition.as_deref().map(parse_condition).transpose()?;
            commands::cmd_stats(&config, condition, models.as_deref(), features.as_deref(), out)
        }
        Command::Evaluate { assignment, condition, models, features } => {
            let condition = condition.as_deref().map(parse_condition).transpose()?;
            commands::cmd_evaluate(
                &config,
                &assignment,
                condition,
                models.as_deref(),
                features.as_deref(),
                out,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = OutputWriter::new();
    match run(cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            out.remove_written();
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

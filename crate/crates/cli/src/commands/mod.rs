//! Subcommand definitions and dispatch.

pub mod analyze;
pub mod augment;
pub mod classify;
pub mod ingest;
pub mod localize;
pub mod report;
pub mod synth;
pub mod train_image;
pub mod train_text;

use crate::config::PipelineConfig;
use crate::failure::Failure;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "postmortem",
    version,
    about = "Multimodal takedown analytics: classify posts, measure censorship rates and lifetimes, fit survival models"
)]
pub struct Cli {
    /// JSON pipeline config; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for all stage artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load and validate a post corpus; write the error report.
    Ingest {
        /// Line-delimited post record file.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Directory of image files named `<image_id>.<ext>`.
        #[arg(long)]
        images: Option<PathBuf>,
    },
    /// Expand a labeled image dataset with the six transforms.
    Augment {
        /// Labeled dataset root (one subdirectory per category).
        #[arg(long)]
        dataset: PathBuf,
        /// Exact output size (target mode); default applies all six
        /// transforms to every image.
        #[arg(long)]
        target: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the image classifier on a labeled dataset.
    TrainImage {
        #[arg(long)]
        dataset: PathBuf,
        /// Square input side (multiple of 4).
        #[arg(long)]
        side: Option<u32>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Train the text classifier on a labeled CSV (text,category).
    TrainText {
        #[arg(long)]
        dataset: PathBuf,
        /// L2 regularization strength.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        min_count: Option<usize>,
        /// Also run stratified k-fold cross-validation.
        #[arg(long)]
        cv: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Classify every post with both models; write decisions and
    /// category memberships (union rule).
    Classify {
        #[arg(long)]
        image_model: Option<PathBuf>,
        #[arg(long)]
        text_model: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Take decisions from a ground-truth table instead of models
        /// (isolates the analytics from classifier error).
        #[arg(long)]
        oracle: Option<PathBuf>,
    },
    /// Export the activation-map gallery for classified images.
    Localize {
        #[arg(long)]
        image_model: Option<PathBuf>,
        /// Cap the gallery size.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Rates, lifetimes, creation-time distributions, and survival fits.
    Analyze {
        /// Histogram bucket for creation times, minutes.
        #[arg(long)]
        bucket_minutes: Option<f64>,
        /// Enter repost/comment counts as ln(1 + x).
        #[arg(long)]
        log1p: bool,
        /// Override the observation end (ISO-8601 UTC).
        #[arg(long)]
        window_end: Option<String>,
    },
    /// Generate a synthetic corpus with planted ground truth.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Rendered image side; 0 skips images entirely.
        #[arg(long)]
        side: Option<u32>,
        /// True coefficients "image,text,reposts,comments,sentiment".
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        window_minutes: Option<f64>,
        /// Baseline hazard, events per minute.
        #[arg(long)]
        hazard: Option<f64>,
        /// Labeled training examples emitted per category.
        #[arg(long)]
        train_per_category: Option<usize>,
    },
    /// Combine the analysis outputs into one report.
    Report {},
    /// Serve the review API for annotation and triage.
    Serve {
        #[arg(long)]
        port: Option<u16>,
    },
}

/// Loads the config, applies global overrides, and dispatches.
pub fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output_dir = Some(out.clone());
    }

    match cli.command {
        Command::Ingest { corpus, images } => ingest::run(&config, corpus, images),
        Command::Augment {
            dataset,
            target,
            seed,
        } => augment::run(&config, &dataset, target, seed),
        Command::TrainImage {
            dataset,
            side,
            epochs,
            seed,
            threshold,
        } => train_image::run(&config, &dataset, side, epochs, seed, threshold),
        Command::TrainText {
            dataset,
            lambda,
            min_count,
            cv,
            seed,
        } => train_text::run(&config, &dataset, lambda, min_count, cv, seed),
        Command::Classify {
            image_model,
            text_model,
            threshold,
            oracle,
        } => classify::run(&config, image_model, text_model, threshold, oracle),
        Command::Localize { image_model, limit } => localize::run(&config, image_model, limit),
        Command::Analyze {
            bucket_minutes,
            log1p,
            window_end,
        } => analyze::run(&config, bucket_minutes, log1p, window_end),
        Command::Synth {
            n,
            seed,
            side,
            beta,
            window_minutes,
            hazard,
            train_per_category,
        } => synth::run(
            &config,
            n,
            seed,
            side,
            beta,
            window_minutes,
            hazard,
            train_per_category,
        ),
        Command::Report {} => report::run(&config),
        Command::Serve { port } => crate::server::run(&config, port.unwrap_or(9090)),
    }
}

pub(crate) fn ensure_dir(path: &std::path::Path) -> Result<(), Failure> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

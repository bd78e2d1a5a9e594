//! Pipeline configuration: one JSON file, every flag overrides it.

use crate::failure::Failure;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Post record file (line-delimited).
    pub corpus_file: Option<PathBuf>,
    /// Directory of `<image_id>.<ext>` files.
    pub image_root: Option<PathBuf>,
    /// Root for all stage outputs.
    pub output_dir: Option<PathBuf>,
    pub image_model: Option<PathBuf>,
    pub text_model: Option<PathBuf>,
    pub pos_lexicon: Option<PathBuf>,
    pub neg_lexicon: Option<PathBuf>,
    /// Image confidence gate; text decisions are plain argmax.
    pub threshold: Option<f64>,
    pub seed: Option<u64>,
    /// Observation end for right-censoring; defaults to the corpus window end.
    pub window_end: Option<DateTime<Utc>>,
    pub sentiment: Option<SentimentConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "provider", rename_all = "lowercase")]
pub enum SentimentConfig {
    Lexicon,
    External {
        endpoint: String,
        #[serde(default = "default_path")]
        path: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        #[serde(default)]
        retries: u32,
        #[serde(default)]
        fallback_to_lexicon: bool,
        #[serde(default = "default_concurrency")]
        max_concurrency: usize,
    },
}

fn default_path() -> String {
    "/score".into()
}

fn default_timeout_ms() -> u64 {
    2000
}

fn default_concurrency() -> usize {
    8
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("bad config {}: {e}", path.display())))?;
        if let Some(t) = config.threshold {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Failure::Usage(format!(
                    "threshold must be in (0, 1], got {t}"
                )));
            }
        }
        Ok(config)
    }

    pub fn output_dir(&self) -> Result<&Path, Failure> {
        self.output_dir
            .as_deref()
            .ok_or_else(|| Failure::Usage("no output directory configured (--out)".into()))
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
            .unwrap_or(postmortem::scores::DEFAULT_IMAGE_THRESHOLD)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

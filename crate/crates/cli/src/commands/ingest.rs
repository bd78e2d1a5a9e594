use crate::commands::ensure_dir;
use crate::config::PipelineConfig;
use crate::failure::Failure;
use postmortem::corpus::{self, CensorshipStatus, DeletionMatcher};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize, Deserialize)]
pub struct IngestMeta {
    pub n_posts: usize,
    pub n_errors: usize,
    pub window_start: chrono::DateTime<chrono::Utc>,
    pub window_end: chrono::DateTime<chrono::Utc>,
    pub image_root: Option<PathBuf>,
    pub status_counts: BTreeMap<String, usize>,
    pub missing_images: usize,
}

pub fn run(
    config: &PipelineConfig,
    corpus_flag: Option<PathBuf>,
    images_flag: Option<PathBuf>,
) -> Result<(), Failure> {
    let corpus_file = corpus_flag
        .or_else(|| config.corpus_file.clone())
        .ok_or_else(|| Failure::Usage("no corpus file given (--corpus)".into()))?;
    let image_root = images_flag.or_else(|| config.image_root.clone());
    let out = config.output_dir()?.join("ingest");
    ensure_dir(&out)?;

    let loaded = corpus::load_posts(&corpus_file, image_root.as_deref())?;
    let matcher = DeletionMatcher::default();
    let mut status_counts = BTreeMap::new();
    for post in &loaded.corpus.posts {
        let key = match matcher.status_of(post) {
            CensorshipStatus::Censored => "censored",
            CensorshipStatus::VoluntaryOrUnknown => "voluntary_or_unknown",
            CensorshipStatus::Live => "live",
        };
        *status_counts.entry(key.to_string()).or_insert(0usize) += 1;
    }

    corpus::write_posts(&out.join("corpus.jsonl"), &loaded.corpus.posts)?;
    corpus::write_error_report(&out.join("errors.jsonl"), &loaded.errors)?;
    let meta = IngestMeta {
        n_posts: loaded.corpus.len(),
        n_errors: loaded.errors.len(),
        window_start: loaded.corpus.window_start,
        window_end: loaded.corpus.window_end,
        image_root,
        status_counts,
        missing_images: loaded.corpus.missing_images.len(),
    };
    std::fs::write(out.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    println!(
        "ingested {} posts ({} rejected records) into {}",
        meta.n_posts,
        meta.n_errors,
        out.display()
    );
    Ok(())
}

/// Loads the ingested corpus back for downstream stages.
pub fn load_ingested(
    out_root: &Path,
) -> Result<(postmortem::corpus::Corpus, IngestMeta), Failure> {
    let dir = out_root.join("ingest");
    let meta_path = dir.join("meta.json");
    if !meta_path.exists() {
        return Err(Failure::missing("ingest", meta_path.display()));
    }
    let meta: IngestMeta = serde_json::from_str(&std::fs::read_to_string(&meta_path)?)?;
    let loaded = corpus::load_posts(&dir.join("corpus.jsonl"), meta.image_root.as_deref())?;
    Ok((loaded.corpus, meta))
}

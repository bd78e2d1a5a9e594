//! Post data model, deletion-status semantics, sampling, and lifetimes.

use crate::category::Category;
use crate::error::{Error, Result};
use chrono::{DateTime, Utc};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use unicode_normalization::UnicodeNormalization;

/// One social-media post as ingested from the record file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Post {
    pub id: String,
    pub user_id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub image_refs: Vec<String>,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deleted_at: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deletion_message: Option<String>,
    #[serde(default)]
    pub repost_count: u64,
    #[serde(default)]
    pub comment_count: u64,
}

impl Post {
    /// Checks the record-level invariants; returns the reason on violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if let Some(deleted) = self.deleted_at {
            if deleted < self.created_at {
                return Err(format!(
                    "deleted_at {} precedes created_at {}",
                    deleted, self.created_at
                ));
            }
        }
        if self.text.is_empty() && self.image_refs.is_empty() {
            return Err("post has neither text nor images".into());
        }
        Ok(())
    }

    /// Minutes between creation and deletion; `None` while the post lives.
    pub fn lifetime_minutes(&self) -> Option<f64> {
        self.deleted_at
            .map(|d| (d - self.created_at).num_milliseconds() as f64 / 60_000.0)
    }
}

/// How a post left the platform, if it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CensorshipStatus {
    /// Removed by the platform (the only deletions counted as censorship).
    Censored,
    /// Deleted, but by the author or for reasons that cannot be attributed.
    VoluntaryOrUnknown,
    /// Still up.
    Live,
}

/// Maps platform deletion messages onto [`CensorshipStatus`].
///
/// Matching is case-insensitive after whitespace normalization, and the
/// alias tables are configurable because the message strings are
/// locale-dependent renderings. Only messages in the censored table count
/// as censorship; a deleted post with an unrecognized message is
/// conservatively classified [`CensorshipStatus::VoluntaryOrUnknown`].
#[derive(Debug, Clone)]
pub struct DeletionMatcher {
    censored: Vec<String>,
    voluntary: Vec<String>,
}

impl Default for DeletionMatcher {
    fn default() -> Self {
        DeletionMatcher::new(&["permission denied"], &["weibo does not exist"])
    }
}

fn normalize_message(msg: &str) -> String {
    msg.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

impl DeletionMatcher {
    pub fn new(censored: &[&str], voluntary: &[&str]) -> Self {
        DeletionMatcher {
            censored: censored.iter().map(|m| normalize_message(m)).collect(),
            voluntary: voluntary.iter().map(|m| normalize_message(m)).collect(),
        }
    }

    /// Classifies from the deletion evidence alone. The second element is a
    /// warning for deleted posts whose message was not recognized.
    pub fn classify(
        &self,
        deleted: bool,
        message: Option<&str>,
    ) -> (CensorshipStatus, Option<String>) {
        if !deleted {
            return (CensorshipStatus::Live, None);
        }
        let normalized = message.map(normalize_message);
        match normalized {
            Some(ref m) if self.censored.iter().any(|a| a == m) => {
                (CensorshipStatus::Censored, None)
            }
            Some(ref m) if self.voluntary.iter().any(|a| a == m) => {
                (CensorshipStatus::VoluntaryOrUnknown, None)
            }
            Some(m) => (
                CensorshipStatus::VoluntaryOrUnknown,
                Some(format!("unrecognized deletion message: {m:?}")),
            ),
            None => (
                CensorshipStatus::VoluntaryOrUnknown,
                Some("deleted without a deletion message".into()),
            ),
        }
    }

    pub fn status_of(&self, post: &Post) -> CensorshipStatus {
        self.classify(post.deleted_at.is_some(), post.deletion_message.as_deref())
            .0
    }
}

/// Classifies a deletion message with the default alias tables.
pub fn classify_deletion(deleted: bool, message: Option<&str>) -> CensorshipStatus {
    DeletionMatcher::default().classify(deleted, message).0
}

/// An immutable collection of posts plus the image store that resolves
/// their image references.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub posts: Vec<Post>,
    pub image_store: HashMap<String, PathBuf>,
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    /// (post id, image id) pairs whose image file was not found.
    pub missing_images: Vec<(String, String)>,
}

impl Corpus {
    /// Builds a corpus from validated posts. The observation window defaults
    /// to the [min, max] of `created_at` unless overridden.
    pub fn new(
        posts: Vec<Post>,
        image_store: HashMap<String, PathBuf>,
        window: Option<(DateTime<Utc>, DateTime<Utc>)>,
    ) -> Result<Corpus> {
        if posts.is_empty() {
            return Err(Error::invalid("corpus has no posts"));
        }
        let min = posts.iter().map(|p| p.created_at).min().unwrap();
        let max = posts.iter().map(|p| p.created_at).max().unwrap();
        let (window_start, window_end) = window.unwrap_or((min, max));
        if min < window_start || max > window_end {
            return Err(Error::invalid(
                "post created_at falls outside the corpus window",
            ));
        }
        let mut missing_images = Vec::new();
        for post in &posts {
            for img in &post.image_refs {
                if !image_store.contains_key(img) {
                    missing_images.push((post.id.clone(), img.clone()));
                }
            }
        }
        Ok(Corpus {
            posts,
            image_store,
            window_start,
            window_end,
            missing_images,
        })
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn post(&self, id: &str) -> Option<&Post> {
        self.posts.iter().find(|p| p.id == id)
    }

    /// Resolved path of the first available image of a post.
    pub fn first_image_path(&self, post: &Post) -> Option<&Path> {
        post.image_refs
            .iter()
            .find_map(|r| self.image_store.get(r))
            .map(PathBuf::as_path)
    }
}

/// A record that failed ingestion, with the line it came from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordError {
    pub line_no: usize,
    pub reason: String,
}

/// Result of [`load_posts`]: the corpus plus the per-record error report.
/// `posts + errors` accounts for every non-blank input line.
#[derive(Debug)]
pub struct LoadOutcome {
    pub corpus: Corpus,
    pub errors: Vec<RecordError>,
}

/// Loads a line-delimited post record file. Malformed records land in the
/// error report instead of being dropped silently; an unreadable file is
/// fatal. `image_root` is scanned for files named `<image_id>.<ext>`.
pub fn load_posts(path: &Path, image_root: Option<&Path>) -> Result<LoadOutcome> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);

    let mut posts = Vec::new();
    let mut errors = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Post>(&line) {
            Ok(post) => match post.validate() {
                Ok(()) => posts.push(post),
                Err(reason) => errors.push(RecordError { line_no, reason }),
            },
            Err(e) => errors.push(RecordError {
                line_no,
                reason: e.to_string(),
            }),
        }
    }

    let image_store = match image_root {
        Some(root) => scan_image_store(root)?,
        None => HashMap::new(),
    };
    let corpus = Corpus::new(posts, image_store, None)?;
    Ok(LoadOutcome { corpus, errors })
}

/// Indexes `<image_id>.<ext>` files directly under `root`.
pub fn scan_image_store(root: &Path) -> Result<HashMap<String, PathBuf>> {
    let mut store = HashMap::new();
    let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            store.insert(stem.to_string(), path.clone());
        }
    }
    Ok(store)
}

/// Writes posts in the same line-delimited record format [`load_posts`] reads.
pub fn write_posts(path: &Path, posts: &[Post]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for post in posts {
        serde_json::to_writer(&mut w, post)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes the record-level error report as line-delimited records.
pub fn write_error_report(path: &Path, errors: &[RecordError]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for err in errors {
        serde_json::to_writer(&mut w, err)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Draws a uniform random subset of `n` live posts. The same seed always
/// yields the same subset; posts come back in creation order.
pub fn sample_uncensored(
    corpus: &Corpus,
    n: usize,
    seed: u64,
    matcher: &DeletionMatcher,
) -> Result<Vec<Post>> {
    let mut live: Vec<&Post> = corpus
        .posts
        .iter()
        .filter(|p| matcher.status_of(p) == CensorshipStatus::Live)
        .collect();
    if live.len() < n {
        return Err(Error::NotEnoughLive {
            requested: n,
            available: live.len(),
        });
    }
    live.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));

    // Partial Fisher-Yates over indices keeps the draw reproducible.
    let mut rng = StdRng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..live.len()).collect();
    for i in 0..n {
        let j = rng.random_range(i..indices.len());
        indices.swap(i, j);
    }
    let mut chosen: Vec<usize> = indices[..n].to_vec();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| live[i].clone()).collect())
}

/// Normalizes text for keyword matching: Unicode NFC, no case folding.
pub fn normalize_text(text: &str) -> String {
    text.nfc().collect()
}

/// Buckets post ids by keyword hits. A post lands under a category when its
/// normalized text contains at least one of that category's keywords, so one
/// post may appear under several categories. Lists are ordered by creation
/// time (ties by id).
pub fn partition_by_keywords(
    corpus: &Corpus,
    keyword_map: &BTreeMap<Category, Vec<String>>,
) -> Result<BTreeMap<Category, Vec<String>>> {
    for (cat, keywords) in keyword_map {
        if keywords.is_empty() {
            return Err(Error::invalid(format!("empty keyword list for {cat}")));
        }
    }
    let mut ordered: Vec<&Post> = corpus.posts.iter().collect();
    ordered.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));

    let mut out: BTreeMap<Category, Vec<String>> = BTreeMap::new();
    for post in ordered {
        let text = normalize_text(&post.text);
        for (cat, keywords) in keyword_map {
            let hit = keywords
                .iter()
                .any(|k| text.contains(normalize_text(k).as_str()));
            if hit {
                out.entry(*cat).or_default().push(post.id.clone());
            }
        }
    }
    Ok(out)
}

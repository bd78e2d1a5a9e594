//! Survival records: one row per post feeding the per-category Cox fits.

use super::cox::{CoxFit, CoxOptions, CoxProblem};
use crate::category::Category;
use crate::corpus::{CensorshipStatus, Corpus, DeletionMatcher};
use crate::error::{Error, Result};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Covariate order used throughout fits, tables, and exports.
pub const COVARIATE_NAMES: [&str; 5] = ["image", "text", "reposts", "comments", "sentiment"];

/// One observation: how long a post survived, whether its removal was
/// observed, and the five analyzed factors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub post_id: String,
    /// Minutes from creation to deletion (event) or to the end of the
    /// observation window (right-censored). Always positive.
    pub duration_minutes: f64,
    /// True when platform removal was observed during the window.
    pub event: bool,
    /// Image classifier decision equals the analyzed category.
    pub image_match: bool,
    /// Text classifier decision equals the analyzed category.
    pub text_match: bool,
    pub reposts: u64,
    pub comments: u64,
    /// Sentiment in [0, 4]; 0 very negative, 4 very positive.
    pub sentiment: f64,
}

impl SurvivalRecord {
    /// Covariate row in [`COVARIATE_NAMES`] order. Count covariates enter
    /// untransformed by default; `log1p_counts` switches them to ln(1 + x).
    pub fn covariates(&self, log1p_counts: bool) -> [f64; 5] {
        let count = |x: u64| {
            if log1p_counts {
                (x as f64).ln_1p()
            } else {
                x as f64
            }
        };
        [
            self.image_match as u8 as f64,
            self.text_match as u8 as f64,
            count(self.reposts),
            count(self.comments),
            self.sentiment,
        ]
    }
}

/// Output of [`build_survival_records`].
#[derive(Debug, Clone)]
pub struct RecordBuild {
    pub records: Vec<SurvivalRecord>,
    pub warnings: Vec<String>,
}

/// Builds the survival sample for one category.
///
/// A post participates when either modality assigned it to `category`.
/// Censored posts contribute their lifetime with an event; live posts are
/// right-censored at `window_end`; posts deleted for unattributable reasons
/// are excluded entirely. Zero-duration rows are clamped to one minute with
/// a warning.
#[allow(clippy::too_many_arguments)]
pub fn build_survival_records(
    corpus: &Corpus,
    category: Category,
    image_decisions: &HashMap<String, Category>,
    text_decisions: &HashMap<String, Category>,
    sentiments: &HashMap<String, f64>,
    window_end: DateTime<Utc>,
    matcher: &DeletionMatcher,
) -> Result<RecordBuild> {
    let mut records = Vec::new();
    let mut warnings = Vec::new();

    for post in &corpus.posts {
        if window_end < post.created_at {
            return Err(Error::invalid(format!(
                "window_end precedes created_at of post {}",
                post.id
            )));
        }
        let image_match = image_decisions.get(&post.id) == Some(&category);
        let text_match = text_decisions.get(&post.id) == Some(&category);
        if !image_match && !text_match {
            continue;
        }

        let (duration, event) = match matcher.status_of(post) {
            CensorshipStatus::Censored => (
                post.lifetime_minutes().expect("censored implies deleted_at"),
                true,
            ),
            CensorshipStatus::Live => (
                (window_end - post.created_at).num_milliseconds() as f64 / 60_000.0,
                false,
            ),
            CensorshipStatus::VoluntaryOrUnknown => continue,
        };
        let duration = if duration <= 0.0 {
            warnings.push(format!(
                "post {}: zero-length duration clamped to 1 minute",
                post.id
            ));
            1.0
        } else {
            duration
        };

        let sentiment = match sentiments.get(&post.id) {
            Some(s) => *s,
            None => {
                warnings.push(format!("post {}: missing sentiment, using neutral 2.0", post.id));
                2.0
            }
        };

        records.push(SurvivalRecord {
            post_id: post.id.clone(),
            duration_minutes: duration,
            event,
            image_match,
            text_match,
            reposts: post.repost_count,
            comments: post.comment_count,
            sentiment,
        });
    }

    Ok(RecordBuild { records, warnings })
}

/// Fits the five-covariate proportional-hazards model over the records.
pub fn fit_cox(records: &[SurvivalRecord], opts: CoxOptions) -> Result<CoxFit> {
    fit_cox_with(records, opts, false)
}

pub fn fit_cox_with(
    records: &[SurvivalRecord],
    opts: CoxOptions,
    log1p_counts: bool,
) -> Result<CoxFit> {
    let problem = CoxProblem::new(
        records.iter().map(|r| r.duration_minutes).collect(),
        records.iter().map(|r| r.event).collect(),
        records
            .iter()
            .map(|r| r.covariates(log1p_counts).to_vec())
            .collect(),
        COVARIATE_NAMES.iter().map(|s| s.to_string()).collect(),
    )?;
    problem.fit(opts)
}

/// Writes records as CSV with a fixed, documented column order:
/// post_id, duration_minutes, event, image, text, reposts, comments, sentiment.
pub fn write_records_csv(path: &std::path::Path, records: &[SurvivalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "post_id",
        "duration_minutes",
        "event",
        "image",
        "text",
        "reposts",
        "comments",
        "sentiment",
    ])?;
    for r in records {
        w.write_record([
            r.post_id.clone(),
            format!("{}", r.duration_minutes),
            format!("{}", r.event as u8),
            format!("{}", r.image_match as u8),
            format!("{}", r.text_match as u8),
            format!("{}", r.reposts),
            format!("{}", r.comments),
            format!("{}", r.sentiment),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads records written by [`write_records_csv`].
pub fn read_records_csv(path: &std::path::Path) -> Result<Vec<SurvivalRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize::<RecordRow>() {
        let row = row?;
        out.push(SurvivalRecord {
            post_id: row.post_id,
            duration_minutes: row.duration_minutes,
            event: row.event != 0,
            image_match: row.image != 0,
            text_match: row.text != 0,
            reposts: row.reposts,
            comments: row.comments,
            sentiment: row.sentiment,
        });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct RecordRow {
    post_id: String,
    duration_minutes: f64,
    event: u8,
    image: u8,
    text: u8,
    reposts: u64,
    comments: u64,
    sentiment: f64,
}

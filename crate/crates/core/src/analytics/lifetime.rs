//! Lifetime distributions and creation-time histograms.

use crate::category::Category;
use crate::corpus::{CensorshipStatus, Corpus, DeletionMatcher};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Five-number summary of censored-post lifetimes in one category.
///
/// Quantiles use the lower empirical convention: the value at index
/// `floor((n - 1) * q)` of the sorted sample, so the median of an even
/// count is the lower of the two middle values.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LifetimeSummary {
    pub category: Category,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn lower_quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).floor() as usize;
    sorted[idx]
}

/// Summarizes lifetimes per category; empty categories are omitted and
/// returned separately.
pub fn lifetime_summary(
    lifetimes: &BTreeMap<Category, Vec<f64>>,
) -> (Vec<LifetimeSummary>, Vec<Category>) {
    let mut rows = Vec::new();
    let mut omitted = Vec::new();
    for (category, values) in lifetimes {
        if values.is_empty() {
            omitted.push(*category);
            continue;
        }
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("lifetimes are finite"));
        rows.push(LifetimeSummary {
            category: *category,
            count: sorted.len(),
            min: sorted[0],
            q1: lower_quantile(&sorted, 0.25),
            median: lower_quantile(&sorted, 0.5),
            q3: lower_quantile(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        });
    }
    (rows, omitted)
}

/// Aligned creation-time histograms for censored vs uncensored posts in one
/// category, bucketed over the corpus window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreationHistogram {
    pub category: Category,
    pub bucket_minutes: f64,
    pub censored: Vec<usize>,
    pub uncensored: Vec<usize>,
}

/// Buckets creation times of each category's members over
/// `[window_start, window_end]`. Posts deleted for unattributable reasons
/// count in neither histogram.
pub fn creation_time_distribution(
    corpus: &Corpus,
    memberships: &BTreeMap<Category, Vec<String>>,
    bucket_minutes: f64,
    matcher: &DeletionMatcher,
) -> Result<Vec<CreationHistogram>> {
    if !(bucket_minutes > 0.0) {
        return Err(Error::invalid("bucket size must be positive"));
    }
    let window_minutes =
        (corpus.window_end - corpus.window_start).num_milliseconds() as f64 / 60_000.0;
    let n_bins = ((window_minutes / bucket_minutes).ceil() as usize).max(1);

    let mut out = Vec::new();
    for (category, ids) in memberships {
        let mut censored = vec![0usize; n_bins];
        let mut uncensored = vec![0usize; n_bins];
        for id in ids {
            let Some(post) = corpus.post(id) else { continue };
            let offset =
                (post.created_at - corpus.window_start).num_milliseconds() as f64 / 60_000.0;
            let bin = ((offset / bucket_minutes).floor() as usize).min(n_bins - 1);
            match matcher.status_of(post) {
                CensorshipStatus::Censored => censored[bin] += 1,
                CensorshipStatus::Live => uncensored[bin] += 1,
                CensorshipStatus::VoluntaryOrUnknown => {}
            }
        }
        out.push(CreationHistogram {
            category: *category,
            bucket_minutes,
            censored,
            uncensored,
        });
    }
    Ok(out)
}

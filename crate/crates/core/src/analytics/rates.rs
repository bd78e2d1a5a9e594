//! Censorship rates per category.

use crate::category::Category;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Censored/uncensored counts for one category.
/// The rate is `n_censored / (n_censored + n_uncensored)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateRow {
    pub category: Category,
    pub n_censored: usize,
    pub n_uncensored: usize,
}

impl RateRow {
    pub fn total(&self) -> usize {
        self.n_censored + self.n_uncensored
    }

    pub fn rate(&self) -> f64 {
        self.n_censored as f64 / self.total() as f64
    }

    pub fn rate_percent(&self) -> f64 {
        100.0 * self.rate()
    }
}

/// Builds one row per category from (censored ids, uncensored ids).
/// Categories with no posts at all are omitted and returned separately.
pub fn censorship_rate(
    categorized: &BTreeMap<Category, (Vec<String>, Vec<String>)>,
) -> (Vec<RateRow>, Vec<Category>) {
    let mut rows = Vec::new();
    let mut omitted = Vec::new();
    for (category, (censored, uncensored)) in categorized {
        if censored.is_empty() && uncensored.is_empty() {
            omitted.push(*category);
            continue;
        }
        rows.push(RateRow {
            category: *category,
            n_censored: censored.len(),
            n_uncensored: uncensored.len(),
        });
    }
    (rows, omitted)
}

/// Categories whose computed rate disagrees with an externally printed
/// percentage by more than `tol_percent_points`. Used to flag rows of a
/// published benchmark table that do not reproduce from their own counts.
pub fn rate_mismatches(
    rows: &[RateRow],
    printed_percent: &[(Category, f64)],
    tol_percent_points: f64,
) -> Vec<Category> {
    let mut flagged = Vec::new();
    for (category, printed) in printed_percent {
        if let Some(row) = rows.iter().find(|r| r.category == *category) {
            if (row.rate_percent() - printed).abs() > tol_percent_points {
                flagged.push(*category);
            }
        }
    }
    flagged
}

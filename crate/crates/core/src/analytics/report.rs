//! Plain-text report tables for rates, lifetimes, and survival fits.

use super::cox::CoxFit;
use super::lifetime::LifetimeSummary;
use super::rates::RateRow;
use super::records::COVARIATE_NAMES;
use crate::category::Category;
use std::collections::BTreeMap;

/// Renders a coefficient to two decimals, normalizing negative zero.
pub fn format_coef(beta: f64) -> String {
    if beta.abs() < 0.005 {
        "0.00".to_string()
    } else {
        format!("{beta:.2}")
    }
}

/// Renders a p-value: two decimals, with everything below 0.005 shown as
/// "<0.005".
pub fn format_p(p: f64) -> String {
    if !p.is_finite() {
        "n/a".to_string()
    } else if p < 0.005 {
        "<0.005".to_string()
    } else {
        format!("{p:.2}")
    }
}

/// Per-category survival regression table: coefficient and p-value columns
/// for each of the five factors. Non-identifiable coefficients render as
/// dashes.
pub fn wald_table(fits: &BTreeMap<Category, CoxFit>) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<20}", "Category"));
    for name in COVARIATE_NAMES {
        out.push_str(&format!("{:>11}{:>8}", format!("{name}"), "P"));
    }
    out.push('\n');
    for (category, fit) in fits {
        out.push_str(&format!("{:<20}", category.name()));
        for name in COVARIATE_NAMES {
            match fit.estimate(name) {
                Some(est) => {
                    out.push_str(&format!("{:>11}{:>8}", format_coef(est.beta), format_p(est.p)));
                }
                None => out.push_str(&format!("{:>11}{:>8}", "--", "--")),
            }
        }
        if !fit.converged {
            out.push_str("  [did not converge]");
        }
        out.push('\n');
    }
    out
}

/// Censorship-rate table, one row per category. Categories listed in
/// `flagged` get a marker indicating the printed reference percentage did
/// not reproduce from the counts.
pub fn rate_table(rows: &[RateRow], flagged: &[Category]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<20}{:>10}{:>12}{:>8}\n",
        "Category", "Censored", "Uncensored", "Rate"
    ));
    for row in rows {
        let marker = if flagged.contains(&row.category) {
            "  [reference rate mismatch]"
        } else {
            ""
        };
        out.push_str(&format!(
            "{:<20}{:>10}{:>12}{:>7.0}%{}\n",
            row.category.name(),
            row.n_censored,
            row.n_uncensored,
            row.rate_percent(),
            marker
        ));
    }
    out
}

/// Lifetime five-number summaries, one row per category, minutes.
pub fn lifetime_table(rows: &[LifetimeSummary]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<20}{:>7}{:>9}{:>9}{:>9}{:>9}{:>9}\n",
        "Category", "N", "Min", "Q1", "Median", "Q3", "Max"
    ));
    for row in rows {
        out.push_str(&format!(
            "{:<20}{:>7}{:>9.1}{:>9.1}{:>9.1}{:>9.1}{:>9.1}\n",
            row.category.name(),
            row.count,
            row.min,
            row.q1,
            row.median,
            row.q3,
            row.max
        ));
    }
    out
}

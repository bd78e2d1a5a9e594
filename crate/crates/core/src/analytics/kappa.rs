//! Chance-corrected inter-rater agreement.

use crate::category::Category;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Cohen's kappa: observed agreement corrected by the agreement expected
/// from the raters' marginal label frequencies. `kappa` is `None` when the
/// expected agreement is 1 (both raters constant), where the statistic is
/// undefined.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KappaResult {
    pub observed: f64,
    pub expected: f64,
    pub kappa: Option<f64>,
    pub n: usize,
}

/// Computes kappa over two equal-length label sequences.
pub fn cohens_kappa(labels_a: &[Category], labels_b: &[Category]) -> Result<KappaResult> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::invalid(format!(
            "label lists differ in length: {} vs {}",
            labels_a.len(),
            labels_b.len()
        )));
    }
    if labels_a.is_empty() {
        return Err(Error::invalid("label lists are empty"));
    }
    let n = labels_a.len() as f64;

    let agreements = labels_a
        .iter()
        .zip(labels_b)
        .filter(|(a, b)| a == b)
        .count();
    let observed = agreements as f64 / n;

    let mut marg_a: HashMap<Category, usize> = HashMap::new();
    let mut marg_b: HashMap<Category, usize> = HashMap::new();
    for (a, b) in labels_a.iter().zip(labels_b) {
        *marg_a.entry(*a).or_insert(0) += 1;
        *marg_b.entry(*b).or_insert(0) += 1;
    }
    let expected: f64 = marg_a
        .iter()
        .map(|(cat, ca)| {
            let cb = marg_b.get(cat).copied().unwrap_or(0);
            (*ca as f64 / n) * (cb as f64 / n)
        })
        .sum();

    let kappa = if (1.0 - expected).abs() < 1e-12 {
        None
    } else {
        Some((observed - expected) / (1.0 - expected))
    };
    Ok(KappaResult {
        observed,
        expected,
        kappa,
        n: labels_a.len(),
    })
}

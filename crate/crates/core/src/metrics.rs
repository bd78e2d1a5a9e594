//! Classifier evaluation: confusion matrices and precision/recall/F1.

use crate::category::{Category, CATEGORY_COUNT};
use serde::{Deserialize, Serialize};

/// Per-category metrics. A metric is `None` when its denominator is zero
/// (no true examples for recall, no predictions for precision).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub category: Category,
    /// True examples of this category in the evaluation set.
    pub support: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// False-positive rate FP / (FP + TN).
    pub fp_rate: Option<f64>,
}

/// Evaluation summary: a 15x15 confusion matrix (rows = true, columns =
/// predicted) with per-category and averaged metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: Vec<Vec<usize>>,
    pub per_category: Vec<CategoryMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub accuracy: f64,
    pub total: usize,
}

impl EvalReport {
    /// Builds a report from (true, predicted) pairs.
    pub fn from_pairs(pairs: &[(Category, Category)]) -> EvalReport {
        let mut confusion = vec![vec![0usize; CATEGORY_COUNT]; CATEGORY_COUNT];
        for (truth, pred) in pairs {
            confusion[truth.index()][pred.index()] += 1;
        }
        Self::from_confusion(confusion)
    }

    pub fn from_confusion(confusion: Vec<Vec<usize>>) -> EvalReport {
        assert_eq!(confusion.len(), CATEGORY_COUNT);
        let total: usize = confusion.iter().flatten().sum();
        let mut per_category = Vec::with_capacity(CATEGORY_COUNT);
        let mut correct = 0usize;

        for c in Category::ALL {
            let i = c.index();
            let tp = confusion[i][i];
            let row: usize = confusion[i].iter().sum();
            let col: usize = confusion.iter().map(|r| r[i]).sum();
            let fp = col - tp;
            let tn = total - row - fp;
            correct += tp;

            let precision = (col > 0).then(|| tp as f64 / col as f64);
            let recall = (row > 0).then(|| tp as f64 / row as f64);
            let f1 = match (precision, recall) {
                (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
                (Some(_), Some(_)) => Some(0.0),
                _ => None,
            };
            let fp_rate = (fp + tn > 0).then(|| fp as f64 / (fp + tn) as f64);
            per_category.push(CategoryMetrics {
                category: c,
                support: row,
                precision,
                recall,
                f1,
                fp_rate,
            });
        }

        let mean = |f: fn(&CategoryMetrics) -> Option<f64>| {
            let vals: Vec<f64> = per_category.iter().filter_map(f).collect();
            if vals.is_empty() {
                0.0
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            }
        };
        let accuracy = if total > 0 {
            correct as f64 / total as f64
        } else {
            0.0
        };

        // For single-label multiclass, micro-P = micro-R = accuracy.
        EvalReport {
            macro_precision: mean(|m| m.precision),
            macro_recall: mean(|m| m.recall),
            macro_f1: mean(|m| m.f1),
            micro_precision: accuracy,
            micro_recall: accuracy,
            micro_f1: accuracy,
            accuracy,
            total,
            per_category,
            confusion,
        }
    }

    /// Macro averages restricted to categories actually present in the
    /// evaluation set. Identical to the plain macro numbers when every
    /// category has support.
    pub fn present_macro_f1(&self) -> f64 {
        let vals: Vec<f64> = self
            .per_category
            .iter()
            .filter(|m| m.support > 0)
            .filter_map(|m| m.f1)
            .collect();
        if vals.is_empty() {
            0.0
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    }

    /// Plain-text confusion matrix, slugs abbreviated to keep rows narrow.
    pub fn render_confusion(&self) -> String {
        let mut out = String::new();
        out.push_str("true\\pred");
        for c in Category::ALL {
            out.push_str(&format!(" {:>5}", &c.slug()[..c.slug().len().min(5)]));
        }
        out.push('\n');
        for c in Category::ALL {
            out.push_str(&format!("{:<9}", &c.slug()[..c.slug().len().min(9)]));
            for p in Category::ALL {
                out.push_str(&format!(" {:>5}", self.confusion[c.index()][p.index()]));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_give_unit_f1() {
        let pairs: Vec<(Category, Category)> = Category::ALL
            .iter()
            .flat_map(|c| std::iter::repeat_n((*c, *c), 3))
            .collect();
        let report = EvalReport::from_pairs(&pairs);
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.macro_f1, 1.0);
        for m in &report.per_category {
            assert_eq!(m.f1, Some(1.0));
            assert_eq!(m.fp_rate, Some(0.0));
        }
    }

    #[test]
    fn degenerate_classifier_has_zero_topic_recall() {
        // Everything predicted Other on a topic-only test set.
        let pairs: Vec<(Category, Category)> = Category::topics()
            .map(|c| (c, Category::Other))
            .collect();
        let report = EvalReport::from_pairs(&pairs);
        for m in &report.per_category {
            if m.category == Category::Other {
                assert_eq!(m.recall, None); // no true Other examples
                assert_eq!(m.precision, Some(0.0));
            } else {
                assert_eq!(m.recall, Some(0.0));
                assert_eq!(m.precision, None); // never predicted
            }
        }
    }

    #[test]
    fn trace_over_total_is_accuracy_and_micro_matches() {
        let pairs = vec![
            (Category::Fire, Category::Fire),
            (Category::Fire, Category::Rainstorm),
            (Category::Rainstorm, Category::Rainstorm),
            (Category::Protest, Category::Fire),
        ];
        let report = EvalReport::from_pairs(&pairs);
        let trace: usize = (0..CATEGORY_COUNT).map(|i| report.confusion[i][i]).sum();
        assert_eq!(report.accuracy, trace as f64 / 4.0);
        assert_eq!(report.micro_precision, report.accuracy);
        assert_eq!(report.micro_recall, report.accuracy);
    }

    #[test]
    fn row_sums_match_support() {
        let pairs = vec![
            (Category::Fire, Category::Fire),
            (Category::Fire, Category::Other),
            (Category::Other, Category::Other),
        ];
        let report = EvalReport::from_pairs(&pairs);
        for m in &report.per_category {
            let row_sum: usize = report.confusion[m.category.index()].iter().sum();
            assert_eq!(m.support, row_sum);
        }
    }
}

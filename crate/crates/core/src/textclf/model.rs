//! Multinomial logistic regression over n-gram counts.

use super::lbfgs;
use super::ngram::{FeatureVector, NgramVocabulary};
use super::tokenize::{DefaultTokenizer, Tokenizer};
use crate::category::{Category, CATEGORY_COUNT};
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::scores::ClassScores;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Clone, Copy)]
pub struct TextTrainOptions {
    /// N-grams seen fewer times than this across the corpus are dropped.
    pub min_count: usize,
    /// Gradient infinity-norm tolerance for the optimizer.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TextTrainOptions {
    fn default() -> Self {
        TextTrainOptions {
            min_count: 2,
            tol: 1e-5,
            max_iter: 500,
        }
    }
}

/// Fitted classifier: a weight row per category over the frozen vocabulary
/// plus per-category biases. Decisions are plain argmax of the softmax; the
/// confidence gate applies to images only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TextModel {
    vocab: NgramVocabulary,
    /// Row-major CATEGORY_COUNT x vocab.len().
    weights: Vec<f64>,
    bias: Vec<f64>,
    pub lambda: f64,
}

impl TextModel {
    pub fn vocab(&self) -> &NgramVocabulary {
        &self.vocab
    }

    /// L2 norm of the regularized weight block (biases excluded).
    pub fn weight_l2_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn scores_for_features(&self, features: &FeatureVector) -> ClassScores {
        let v = self.vocab.len();
        let mut logits = vec![0.0; CATEGORY_COUNT];
        for (c, logit) in logits.iter_mut().enumerate() {
            let mut acc = self.bias[c];
            for &(i, count) in features.entries() {
                acc += self.weights[c * v + i] * count;
            }
            *logit = acc;
        }
        ClassScores::from_logits(&logits)
    }

    pub fn predict_tokens(&self, tokens: &[String]) -> ClassScores {
        self.scores_for_features(&self.vocab.extract(tokens))
    }

    /// Scores raw text with the default tokenizer.
    pub fn predict_text(&self, text: &str) -> ClassScores {
        self.predict_with(&DefaultTokenizer, text)
    }

    pub fn predict_with(&self, tokenizer: &dyn Tokenizer, text: &str) -> ClassScores {
        self.predict_tokens(&tokenizer.tokenize(text))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<TextModel> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// The training objective: mean negative log-likelihood plus an L2 penalty
/// on the weights (biases unpenalized). Public so its gradient can be
/// verified against finite differences independently of the optimizer.
pub struct TextObjective {
    features: Vec<FeatureVector>,
    labels: Vec<usize>,
    n_features: usize,
    pub lambda: f64,
}

impl TextObjective {
    pub fn new(
        features: Vec<FeatureVector>,
        labels: Vec<Category>,
        n_features: usize,
        lambda: f64,
    ) -> TextObjective {
        TextObjective {
            features,
            labels: labels.into_iter().map(|c| c.index()).collect(),
            n_features,
            lambda,
        }
    }

    /// Parameter count: the weight block then the biases.
    pub fn dim(&self) -> usize {
        CATEGORY_COUNT * self.n_features + CATEGORY_COUNT
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        self.value_and_grad(theta).0
    }

    pub fn value_and_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(theta.len(), self.dim());
        let v = self.n_features;
        let (weights, bias) = theta.split_at(CATEGORY_COUNT * v);
        let n = self.features.len() as f64;

        let mut loss = 0.0;
        let mut grad = vec![0.0; theta.len()];
        let mut logits = [0.0f64; CATEGORY_COUNT];

        for (fv, &label) in self.features.iter().zip(&self.labels) {
            for (c, logit) in logits.iter_mut().enumerate() {
                let mut acc = bias[c];
                for &(i, count) in fv.entries() {
                    acc += weights[c * v + i] * count;
                }
                *logit = acc;
            }
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_sum = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            loss += (log_sum - logits[label]) / n;

            for c in 0..CATEGORY_COUNT {
                let p = (logits[c] - log_sum).exp();
                let residual = (p - if c == label { 1.0 } else { 0.0 }) / n;
                grad[CATEGORY_COUNT * v + c] += residual;
                for &(i, count) in fv.entries() {
                    grad[c * v + i] += residual * count;
                }
            }
        }

        for (k, w) in weights.iter().enumerate() {
            loss += 0.5 * self.lambda * w * w;
            grad[k] += self.lambda * w;
        }
        (loss, grad)
    }
}

/// Training output: the model plus optimizer diagnostics.
#[derive(Debug)]
pub struct TrainedText {
    pub model: TextModel,
    /// Final value of the regularized objective.
    pub objective: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Fits the classifier from (text, label) pairs. Requires at least two
/// examples of every category present in the data. Zero initialization and
/// a deterministic optimizer make retraining reproducible.
pub fn train_text_classifier(
    data: &[(String, Category)],
    lambda: f64,
    opts: TextTrainOptions,
) -> Result<TrainedText> {
    if data.is_empty() {
        return Err(Error::invalid("no training texts"));
    }
    if !(lambda >= 0.0) {
        return Err(Error::invalid("lambda must be nonnegative"));
    }
    let mut per_category: HashMap<Category, usize> = HashMap::new();
    for (_, c) in data {
        *per_category.entry(*c).or_insert(0) += 1;
    }
    if let Some((cat, n)) = per_category.iter().find(|(_, n)| **n < 2) {
        return Err(Error::invalid(format!(
            "category {cat} has only {n} example(s); need at least 2"
        )));
    }

    let tokenizer = DefaultTokenizer;
    let docs: Vec<Vec<String>> = data.iter().map(|(t, _)| tokenizer.tokenize(t)).collect();
    let vocab = NgramVocabulary::fit(&docs, opts.min_count);
    let features: Vec<FeatureVector> = docs.iter().map(|d| vocab.extract(d)).collect();
    let labels: Vec<Category> = data.iter().map(|(_, c)| *c).collect();

    let objective = TextObjective::new(features, labels, vocab.len(), lambda);
    // The ridge contributes a known lambda to the weight-block curvature;
    // seeding the optimizer with that diagonal keeps large lambdas from
    // stalling the bias coordinates.
    let mut inv_diag = vec![1.0 / (1.0 + lambda); objective.dim()];
    for d in inv_diag.iter_mut().skip(CATEGORY_COUNT * vocab.len()) {
        *d = 1.0;
    }
    let outcome = lbfgs::minimize_preconditioned(
        |theta| objective.value_and_grad(theta),
        vec![0.0; objective.dim()],
        opts.tol,
        opts.max_iter,
        Some(&inv_diag),
    );

    let mut warnings = Vec::new();
    if !outcome.converged {
        warnings.push(format!(
            "optimizer stopped after {} iterations with gradient norm {:.2e}",
            outcome.iterations, outcome.grad_norm
        ));
    }

    let v = vocab.len();
    let (weights, bias) = outcome.x.split_at(CATEGORY_COUNT * v);
    Ok(TrainedText {
        model: TextModel {
            vocab,
            weights: weights.to_vec(),
            bias: bias.to_vec(),
            lambda,
        },
        objective: outcome.value,
        grad_norm: outcome.grad_norm,
        iterations: outcome.iterations,
        converged: outcome.converged,
        warnings,
    })
}

/// Stratified fold assignment: per category, a seeded shuffle dealt
/// round-robin over `k` folds. The deal counter carries across categories
/// so fold sizes stay balanced globally. Returns the fold of each item.
pub fn stratified_folds(labels: &[Category], k: usize, seed: u64) -> Vec<usize> {
    let mut folds = vec![0usize; labels.len()];
    let mut next = 0usize;
    for category in Category::ALL {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == category)
            .map(|(i, _)| i)
            .collect();
        let mut rng = StdRng::seed_from_u64(crate::derive_seed(seed, category.index() as u64));
        for i in (1..members.len()).rev() {
            let j = rng.random_range(0..=i);
            members.swap(i, j);
        }
        for idx in members {
            folds[idx] = next % k;
            next += 1;
        }
    }
    folds
}

/// Cross-validation output: the pooled report over all held-out folds.
#[derive(Debug)]
pub struct CvOutcome {
    pub report: EvalReport,
    pub folds: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Stratified k-fold cross-validation with a pooled confusion matrix.
/// Vocabulary and weights are refit on each training split. Categories
/// with fewer members than folds relax stratification with a warning.
pub fn crossvalidate(
    data: &[(String, Category)],
    k: usize,
    seed: u64,
    lambda: f64,
    opts: TextTrainOptions,
) -> Result<CvOutcome> {
    if k < 2 {
        return Err(Error::invalid("need at least 2 folds"));
    }
    if data.len() < k {
        return Err(Error::invalid(format!(
            "{} examples cannot fill {k} folds",
            data.len()
        )));
    }
    let labels: Vec<Category> = data.iter().map(|(_, c)| *c).collect();
    let mut warnings = Vec::new();
    for category in Category::ALL {
        let count = labels.iter().filter(|c| **c == category).count();
        if count > 0 && count < k {
            warnings.push(format!(
                "category {category} has {count} examples for {k} folds; stratification relaxed"
            ));
        }
    }
    let folds = stratified_folds(&labels, k, seed);

    let mut pairs: Vec<(Category, Category)> = Vec::with_capacity(data.len());
    for fold in 0..k {
        let train: Vec<(String, Category)> = data
            .iter()
            .zip(&folds)
            .filter(|(_, f)| **f != fold)
            .map(|(d, _)| d.clone())
            .collect();
        let held: Vec<&(String, Category)> = data
            .iter()
            .zip(&folds)
            .filter(|(_, f)| **f == fold)
            .map(|(d, _)| d)
            .collect();
        if held.is_empty() {
            continue;
        }
        let trained = train_text_classifier(&train, lambda, opts)?;
        warnings.extend(trained.warnings.iter().cloned());
        for (text, truth) in held {
            pairs.push((*truth, trained.model.predict_text(text).argmax()));
        }
    }

    Ok(CvOutcome {
        report: EvalReport::from_pairs(&pairs),
        folds,
        warnings,
    })
}

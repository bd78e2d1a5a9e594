//! Training loop for the image classifier.

use super::model::{to_input, Architecture, ImageModel};
use super::net::{self, Adam, NetParams, Tensor};
use crate::category::{Category, CATEGORY_COUNT};
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::raster::ImageTensor;
use crate::scores::ClassScores;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub arch: Architecture,
    /// Held-out fraction per category; every category lands in both splits.
    pub val_fraction: f64,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Confidence gate stored with the model.
    pub threshold: f64,
    /// Stop once validation macro-F1 (argmax, no gate) reaches this level
    /// AND mean validation loss drops below `early_stop_loss`. The loss
    /// condition keeps training until the softmax is confident enough to
    /// clear the gate, not merely correct.
    pub early_stop_f1: Option<f64>,
    pub early_stop_loss: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            arch: Architecture::default(),
            val_fraction: 0.05,
            seed: 0,
            epochs: 30,
            batch_size: 32,
            learning_rate: 3e-3,
            threshold: crate::scores::DEFAULT_IMAGE_THRESHOLD,
            early_stop_f1: Some(0.995),
            early_stop_loss: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_macro_f1: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: ImageModel,
    pub history: Vec<EpochStats>,
    /// Dataset indices of the validation split.
    pub val_indices: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Stratified train/validation split: per category a seeded shuffle, with
/// `max(1, round(fraction * n))` examples held out.
pub fn stratified_split(
    labels: &[Category],
    fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for category in Category::ALL {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == category)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            continue;
        }
        let mut rng = StdRng::seed_from_u64(crate::derive_seed(seed, category.index() as u64));
        for i in (1..members.len()).rev() {
            let j = rng.random_range(0..=i);
            members.swap(i, j);
        }
        let n_val = ((members.len() as f64 * fraction).round() as usize).max(1);
        let n_val = n_val.min(members.len() - 1);
        val.extend_from_slice(&members[..n_val]);
        train.extend_from_slice(&members[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Trains the classifier. Needs at least two distinct categories, each with
/// at least two examples.
pub fn train_image_classifier(
    data: &[(ImageTensor, Category)],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.arch.validate()?;
    if !(config.val_fraction > 0.0 && config.val_fraction < 1.0) {
        return Err(Error::invalid("validation fraction must be in (0, 1)"));
    }
    let mut per_category: HashMap<Category, usize> = HashMap::new();
    for (_, c) in data {
        *per_category.entry(*c).or_insert(0) += 1;
    }
    if per_category.len() < 2 {
        return Err(Error::invalid(
            "need at least two categories for a stratified split over the 15-way head",
        ));
    }
    if let Some((cat, n)) = per_category.iter().find(|(_, n)| **n < 2) {
        return Err(Error::invalid(format!(
            "category {cat} has only {n} example(s); need at least 2"
        )));
    }

    let labels: Vec<Category> = data.iter().map(|(_, c)| *c).collect();
    let (train_idx, val_idx) = stratified_split(&labels, config.val_fraction, config.seed);

    // Decode/letterbox once up front.
    let inputs: Vec<Tensor> = data
        .iter()
        .map(|(img, _)| to_input(img, config.arch.input_side))
        .collect();

    let mut params = NetParams::init(config.arch.channels, CATEGORY_COUNT, config.seed);
    let mut adam = Adam::new(&params, config.learning_rate);
    let mut history: Vec<EpochStats> = Vec::new();
    let mut warnings = Vec::new();

    for epoch in 0..config.epochs {
        let mut order = train_idx.clone();
        let mut rng =
            StdRng::seed_from_u64(crate::derive_seed(config.seed, 0x5000 + epoch as u64));
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }

        let mut train_loss = 0.0;
        for batch in order.chunks(config.batch_size.max(1)) {
            let mut grad = params.zeros_like();
            let mut batch_loss = 0.0;
            for &i in batch {
                let trace = net::forward(&params, &inputs[i]);
                let (loss, mut d_logits) = net::softmax_ce(&trace.logits, labels[i].index());
                batch_loss += loss;
                for d in &mut d_logits {
                    *d /= batch.len() as f64;
                }
                net::backward(&params, &trace, &d_logits, &mut grad);
            }
            train_loss += batch_loss;
            adam.step(&mut params, &grad);
        }
        train_loss /= train_idx.len() as f64;

        let mut val_loss = 0.0;
        let mut pairs = Vec::with_capacity(val_idx.len());
        for &i in &val_idx {
            let trace = net::forward(&params, &inputs[i]);
            let (loss, _) = net::softmax_ce(&trace.logits, labels[i].index());
            val_loss += loss;
            let scores = ClassScores::from_logits(&trace.logits);
            pairs.push((labels[i], scores.argmax()));
        }
        val_loss /= val_idx.len() as f64;
        let val_macro_f1 = EvalReport::from_pairs(&pairs).present_macro_f1();

        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
            val_macro_f1,
        });
        if let Some(target) = config.early_stop_f1 {
            if val_macro_f1 >= target && val_loss <= config.early_stop_loss {
                break;
            }
        }
    }

    if history.len() >= 2 {
        let first = history[0].val_loss;
        if history[1..].iter().all(|e| e.val_loss >= first) {
            warnings.push("validation loss never improved over the first epoch".to_string());
        }
    }

    Ok(TrainOutcome {
        model: ImageModel {
            arch: config.arch,
            params,
            categories: Category::ALL.to_vec(),
            threshold: config.threshold,
        },
        history,
        val_indices: val_idx,
        warnings,
    })
}

/// Evaluates with the confidence gate applied, so low-confidence topic
/// predictions route to `Other` exactly as they do in the pipeline.
pub fn evaluate(
    model: &ImageModel,
    test: &[(ImageTensor, Category)],
    threshold: f64,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::invalid("empty test set"));
    }
    let pairs: Vec<(Category, Category)> = test
        .iter()
        .map(|(img, truth)| (*truth, model.predict(img).decide(threshold)))
        .collect();
    Ok(EvalReport::from_pairs(&pairs))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Color-dominant motifs on dark noise: trivially separable.
    fn motif_image(color: [u8; 3], seed: u64) -> ImageTensor {
        let mut rng = StdRng::seed_from_u64(seed);
        let side = 16u32;
        let mut img = ImageTensor::from_fn(side, side, |_, _| [rng.random_range(0..40); 3]);
        let cx = rng.random_range(4..12);
        let cy = rng.random_range(4..12);
        for y in 0..side {
            for x in 0..side {
                let dx = x as i64 - cx as i64;
                let dy = y as i64 - cy as i64;
                if dx * dx + dy * dy <= 9 {
                    img.set_px(x, y, color);
                }
            }
        }
        img
    }

    fn motif_dataset(per_cat: usize, seed: u64) -> Vec<(ImageTensor, Category)> {
        let cats = [
            (Category::Fire, [230u8, 40u8, 30u8]),
            (Category::Rainstorm, [40, 90, 230]),
            (Category::Protest, [40, 220, 60]),
        ];
        let mut out = Vec::new();
        for i in 0..per_cat {
            for (j, (cat, color)) in cats.iter().enumerate() {
                out.push((
                    motif_image(*color, crate::derive_seed(seed, (i * 3 + j) as u64)),
                    *cat,
                ));
            }
        }
        out
    }

    fn fast_config(seed: u64) -> TrainConfig {
        TrainConfig {
            arch: Architecture {
                input_side: 16,
                channels: [4, 8, 12],
            },
            val_fraction: 0.2,
            seed,
            epochs: 25,
            batch_size: 8,
            learning_rate: 5e-3,
            early_stop_f1: Some(0.999),
            ..Default::default()
        }
    }

    #[test]
    fn split_is_stratified_and_seeded() {
        let labels: Vec<Category> = motif_dataset(20, 1).iter().map(|(_, c)| *c).collect();
        let (train, val) = stratified_split(&labels, 0.05, 3);
        assert_eq!(train.len() + val.len(), labels.len());
        // Every category appears in both splits; validation within one
        // example of the requested fraction.
        for cat in [Category::Fire, Category::Rainstorm, Category::Protest] {
            let total = labels.iter().filter(|c| **c == cat).count() as f64;
            let in_val = val.iter().filter(|i| labels[**i] == cat).count() as f64;
            assert!(in_val >= 1.0);
            assert!((in_val - 0.05 * total).abs() <= 1.0);
            assert!(train.iter().any(|i| labels[*i] == cat));
        }
        assert_eq!(stratified_split(&labels, 0.05, 3), (train, val));
        assert_ne!(stratified_split(&labels, 0.05, 4).1, stratified_split(&labels, 0.05, 3).1);
    }

    // Nearest-mean-color classification; certifies that the motif dataset
    // is separable on pixel statistics alone, independent of the network.
    fn pixel_statistic_oracle_accuracy(data: &[(ImageTensor, Category)]) -> f64 {
        let mean_color = |img: &ImageTensor| {
            let mut acc = [0.0f64; 3];
            let mut bright = 0.0f64;
            for y in 0..img.height() {
                for x in 0..img.width() {
                    let p = img.px(x, y);
                    let level = p.iter().map(|v| *v as f64).sum::<f64>();
                    if level > 3.0 * 80.0 {
                        for c in 0..3 {
                            acc[c] += p[c] as f64;
                        }
                        bright += 1.0;
                    }
                }
            }
            acc.map(|v| v / bright.max(1.0))
        };
        let mut centroids: std::collections::HashMap<Category, ([f64; 3], f64)> =
            std::collections::HashMap::new();
        for (img, cat) in data {
            let m = mean_color(img);
            let entry = centroids.entry(*cat).or_insert(([0.0; 3], 0.0));
            for c in 0..3 {
                entry.0[c] += m[c];
            }
            entry.1 += 1.0;
        }
        let centroids: Vec<(Category, [f64; 3])> = centroids
            .into_iter()
            .map(|(cat, (sum, n))| (cat, sum.map(|v| v / n)))
            .collect();
        let correct = data
            .iter()
            .filter(|(img, cat)| {
                let m = mean_color(img);
                let nearest = centroids
                    .iter()
                    .min_by(|a, b| {
                        let da: f64 = a.1.iter().zip(&m).map(|(x, y)| (x - y).powi(2)).sum();
                        let db: f64 = b.1.iter().zip(&m).map(|(x, y)| (x - y).powi(2)).sum();
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap()
                    .0;
                nearest == *cat
            })
            .count();
        correct as f64 / data.len() as f64
    }

    #[test]
    fn learns_separable_motifs() {
        let data = motif_dataset(12, 5);
        // The dataset really is linearly separable: an independent
        // pixel-statistic oracle already classifies it.
        assert!(pixel_statistic_oracle_accuracy(&data) >= 0.95);
        let outcome = train_image_classifier(&data, &fast_config(7)).unwrap();
        let last = outcome.history.last().unwrap();
        assert!(
            last.val_macro_f1 >= 0.95,
            "validation macro-F1 {}",
            last.val_macro_f1
        );
        // Held-out style check on fresh draws from the same generator.
        let test = motif_dataset(4, 99);
        let report = evaluate(&outcome.model, &test, 0.5).unwrap();
        assert!(report.present_macro_f1() >= 0.9, "{}", report.present_macro_f1());
    }

    #[test]
    fn identical_seeds_identical_split_and_model() {
        let data = motif_dataset(6, 2);
        let mut cfg = fast_config(11);
        cfg.epochs = 2;
        cfg.early_stop_f1 = None;
        let a = train_image_classifier(&data, &cfg).unwrap();
        let b = train_image_classifier(&data, &cfg).unwrap();
        assert_eq!(a.val_indices, b.val_indices);
        assert_eq!(a.model.params.head.weight, b.model.params.head.weight);
    }

    #[test]
    fn single_category_errors() {
        let data: Vec<(ImageTensor, Category)> = (0..4)
            .map(|i| (motif_image([200, 0, 0], i), Category::Fire))
            .collect();
        let err = train_image_classifier(&data, &fast_config(1)).unwrap_err();
        assert!(err.to_string().contains("two categories"));
    }

    #[test]
    fn undersized_category_errors() {
        let mut data = motif_dataset(3, 8);
        data.push((motif_image([9, 9, 9], 77), Category::Other));
        let err = train_image_classifier(&data, &fast_config(1)).unwrap_err();
        assert!(err.to_string().contains("Other"));
    }

    #[test]
    fn gate_reflects_in_evaluation() {
        let data = motif_dataset(8, 21);
        let mut cfg = fast_config(3);
        cfg.epochs = 1;
        cfg.early_stop_f1 = None;
        let outcome = train_image_classifier(&data, &cfg).unwrap();
        // An impossible gate routes everything to Other.
        let report = evaluate(&outcome.model, &data, 1.0).unwrap();
        let other_col: usize = (0..CATEGORY_COUNT)
            .map(|r| report.confusion[r][Category::Other.index()])
            .sum();
        assert_eq!(other_col, data.len());
    }
}

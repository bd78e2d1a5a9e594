//! The trained image classifier and its checkpoint format.

use super::net::{self, NetParams, Tensor};
use crate::category::{Category, CATEGORY_COUNT};
use crate::error::{Error, Result};
use crate::raster::ImageTensor;
use crate::scores::ClassScores;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Network topology descriptor kept alongside the weights so checkpoints
/// are self-describing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    /// Square input side; images are letterboxed to this size.
    pub input_side: u32,
    /// Output channels of the three conv stages; the last is the number of
    /// feature maps feeding global average pooling.
    pub channels: [usize; 3],
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            input_side: 224,
            channels: [8, 16, 24],
        }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.input_side < 4 || self.input_side % 4 != 0 {
            return Err(Error::invalid(
                "input side must be a positive multiple of 4 (two 2x2 pools)",
            ));
        }
        if self.channels.iter().any(|c| *c == 0) {
            return Err(Error::invalid("channel counts must be positive"));
        }
        Ok(())
    }
}

/// A trained GAP-head convolutional classifier over the 15 categories.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageModel {
    pub arch: Architecture,
    pub params: NetParams,
    pub categories: Vec<Category>,
    /// Confidence gate used by default when deciding.
    pub threshold: f64,
}

/// Converts an image to the network input: letterbox to the model side,
/// scale pixels to [0, 1], planar CHW.
pub fn to_input(img: &ImageTensor, side: u32) -> Tensor {
    let boxed = img.letterbox(side);
    let s = side as usize;
    let mut data = vec![0.0f64; 3 * s * s];
    for y in 0..s {
        for x in 0..s {
            let px = boxed.px(x as u32, y as u32);
            for c in 0..3 {
                data[(c * s + y) * s + x] = px[c] as f64 / 255.0;
            }
        }
    }
    Tensor::from_data(3, s, s, data)
}

impl ImageModel {
    /// Class probabilities for an image. Deterministic for a fixed model.
    pub fn predict(&self, img: &ImageTensor) -> ClassScores {
        let input = to_input(img, self.arch.input_side);
        let trace = net::forward(&self.params, &input);
        ClassScores::from_logits(&trace.logits)
    }

    /// Gated decision with the model's stored threshold.
    pub fn decide(&self, img: &ImageTensor) -> Category {
        self.predict(img).decide(self.threshold)
    }

    /// Post-ReLU feature maps of the last conv stage for an image,
    /// the per-location activations that relevance maps weight.
    pub fn features(&self, img: &ImageTensor) -> Tensor {
        let input = to_input(img, self.arch.input_side);
        net::forward(&self.params, &input).features
    }

    /// Head weight row for one category.
    pub fn head_weights(&self, category: Category) -> &[f64] {
        let k = self.params.head.in_dim;
        let c = category.index();
        &self.params.head.weight[c * k..(c + 1) * k]
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let checkpoint = Checkpoint {
            format: FORMAT_NAME.to_string(),
            version: 1,
            model: self.clone(),
        };
        serde_json::to_writer(std::io::BufWriter::new(file), &checkpoint)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ImageModel> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let checkpoint: Checkpoint = serde_json::from_reader(std::io::BufReader::new(file))?;
        if checkpoint.format != FORMAT_NAME {
            return Err(Error::invalid(format!(
                "not an image-model checkpoint: format {:?}",
                checkpoint.format
            )));
        }
        if checkpoint.model.categories.len() != CATEGORY_COUNT {
            return Err(Error::invalid("checkpoint category list is not 15-way"));
        }
        checkpoint.model.arch.validate()?;
        Ok(checkpoint.model)
    }
}

const FORMAT_NAME: &str = "postmortem-image-model";

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    model: ImageModel,
}

/// Mean softmax cross-entropy of the head over frozen feature vectors,
/// with its gradient w.r.t. the head weights and biases. This isolates the
/// head so the training gradient can be verified by finite differences on
/// a frozen mini-batch.
pub struct HeadObjective {
    /// One GAP vector per example.
    pub pooled: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl HeadObjective {
    pub fn dim(&self, k: usize) -> usize {
        CATEGORY_COUNT * k + CATEGORY_COUNT
    }

    /// `theta` = head weights (row-major) then biases.
    pub fn value_and_grad(&self, theta: &[f64], k: usize) -> (f64, Vec<f64>) {
        assert_eq!(theta.len(), self.dim(k));
        let (weights, bias) = theta.split_at(CATEGORY_COUNT * k);
        let n = self.pooled.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; theta.len()];
        for (g, &label) in self.pooled.iter().zip(&self.labels) {
            let logits: Vec<f64> = (0..CATEGORY_COUNT)
                .map(|c| {
                    bias[c]
                        + weights[c * k..(c + 1) * k]
                            .iter()
                            .zip(g)
                            .map(|(w, x)| w * x)
                            .sum::<f64>()
                })
                .collect();
            let (l, d_logits) = net::softmax_ce(&logits, label);
            loss += l / n;
            for c in 0..CATEGORY_COUNT {
                grad[CATEGORY_COUNT * k + c] += d_logits[c] / n;
                for i in 0..k {
                    grad[c * k + i] += d_logits[c] * g[i] / n;
                }
            }
        }
        (loss, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    fn tiny_model(seed: u64) -> ImageModel {
        let arch = Architecture {
            input_side: 16,
            channels: [2, 3, 4],
        };
        ImageModel {
            arch,
            params: NetParams::init(arch.channels, CATEGORY_COUNT, seed),
            categories: Category::ALL.to_vec(),
            threshold: 0.8,
        }
    }

    fn noisy(side: u32, seed: u64) -> ImageTensor {
        let mut rng = StdRng::seed_from_u64(seed);
        ImageTensor::from_fn(side, side, |_, _| {
            [rng.random(), rng.random(), rng.random()]
        })
    }

    #[test]
    fn predictions_are_distributions_and_deterministic() {
        let model = tiny_model(4);
        let img = noisy(16, 1);
        let a = model.predict(&img);
        let b = model.predict(&img);
        assert_eq!(a.probs(), b.probs());
        let sum: f64 = a.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn odd_sized_images_are_letterboxed() {
        let model = tiny_model(4);
        let img = noisy(23, 2);
        let scores = model.predict(&img);
        assert!((scores.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = tiny_model(9);
        model.save(&path).unwrap();
        let loaded = ImageModel::load(&path).unwrap();
        assert_eq!(loaded.arch, model.arch);
        assert_eq!(loaded.threshold, model.threshold);
        let img = noisy(16, 3);
        assert_eq!(model.predict(&img).probs(), loaded.predict(&img).probs());
    }

    #[test]
    fn load_rejects_foreign_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.json");
        std::fs::write(&path, r#"{"format":"something-else","version":1}"#).unwrap();
        assert!(ImageModel::load(&path).is_err());
    }

    #[test]
    fn arch_validation() {
        assert!(Architecture {
            input_side: 30,
            channels: [2, 2, 2]
        }
        .validate()
        .is_err());
        assert!(Architecture {
            input_side: 32,
            channels: [0, 2, 2]
        }
        .validate()
        .is_err());
        assert!(Architecture::default().validate().is_ok());
    }

    #[test]
    fn head_objective_gradient_matches_fd() {
        let k = 4;
        let mut rng = StdRng::seed_from_u64(6);
        let objective = HeadObjective {
            pooled: (0..6)
                .map(|_| (0..k).map(|_| rng.random_range(0.0..1.0)).collect())
                .collect(),
            labels: (0..6).map(|i| i % CATEGORY_COUNT).collect(),
        };
        let theta: Vec<f64> = (0..objective.dim(k))
            .map(|_| rng.random_range(-0.5..0.5))
            .collect();
        let (_, grad) = objective.value_and_grad(&theta, k);
        let h = 1e-6;
        for idx in (0..theta.len()).step_by(7) {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[idx] += h;
            minus[idx] -= h;
            let fd = (objective.value_and_grad(&plus, k).0
                - objective.value_and_grad(&minus, k).0)
                / (2.0 * h);
            let denom = grad[idx].abs().max(1e-8);
            assert!((grad[idx] - fd).abs() / denom < 1e-4);
        }
    }
}

//! Class activation maps: per-location relevance read straight off the
//! GAP-head weights, `M_c(x, y) = sum_k W[c, k] * f_k(x, y)`, min-max
//! normalized and bilinearly upsampled to image resolution.

use super::model::ImageModel;
use super::net::Tensor;
use crate::category::Category;
use crate::error::{Error, Result};
use crate::raster::ImageTensor;
use crate::scores::ClassScores;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A spatial relevance map with values in [0, 1]. Unless the map is
/// identically zero, its maximum is exactly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Heatmap {
    /// Coordinates of the largest value (row-major first occurrence).
    pub fn peak(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.data.iter().enumerate() {
            if *v > self.data[best] {
                best = i;
            }
        }
        (best % self.w, best / self.w)
    }
}

/// The weighted feature-map sum, before any normalization. Linear in the
/// weights: `raw_cam(f, w1 + w2) == raw_cam(f, w1) + raw_cam(f, w2)`.
pub fn raw_cam(features: &Tensor, weights: &[f64]) -> Vec<f64> {
    assert_eq!(features.c, weights.len(), "one weight per feature map");
    let area = features.h * features.w;
    let mut map = vec![0.0; area];
    for (k, w) in weights.iter().enumerate() {
        let plane = &features.data[k * area..(k + 1) * area];
        for (m, f) in map.iter_mut().zip(plane) {
            *m += w * f;
        }
    }
    map
}

/// Shift/scale to [0, 1]: `(m - min) / (max - min)`, identically zero when
/// the map is constant.
pub fn normalize_map(map: &[f64]) -> Vec<f64> {
    let min = map.iter().copied().fold(f64::INFINITY, f64::min);
    let max = map.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= min {
        return vec![0.0; map.len()];
    }
    map.iter().map(|v| (v - min) / (max - min)).collect()
}

/// Bilinear upsampling with corner alignment.
pub fn upsample_bilinear(map: &[f64], h: usize, w: usize, out_h: usize, out_w: usize) -> Vec<f64> {
    assert_eq!(map.len(), h * w);
    let mut out = vec![0.0; out_h * out_w];
    let scale_y = if out_h > 1 {
        (h - 1) as f64 / (out_h - 1) as f64
    } else {
        0.0
    };
    let scale_x = if out_w > 1 {
        (w - 1) as f64 / (out_w - 1) as f64
    } else {
        0.0
    };
    for oy in 0..out_h {
        let sy = oy as f64 * scale_y;
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let fy = sy - y0 as f64;
        for ox in 0..out_w {
            let sx = ox as f64 * scale_x;
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let fx = sx - x0 as f64;
            let top = map[y0 * w + x0] * (1.0 - fx) + map[y0 * w + x1] * fx;
            let bot = map[y1 * w + x0] * (1.0 - fx) + map[y1 * w + x1] * fx;
            out[oy * out_w + ox] = top * (1.0 - fy) + bot * fy;
        }
    }
    out
}

/// Relevance map of `category` for an image, at the model's input
/// resolution.
pub fn cam(model: &ImageModel, img: &ImageTensor, category: Category) -> Result<Heatmap> {
    if category.index() >= model.categories.len() {
        return Err(Error::invalid("category index out of range for this model"));
    }
    let features = model.features(img);
    let raw = raw_cam(&features, model.head_weights(category));
    let normalized = normalize_map(&raw);
    let side = model.arch.input_side as usize;
    Ok(Heatmap {
        h: side,
        w: side,
        data: upsample_bilinear(&normalized, features.h, features.w, side, side),
    })
}

/// Blue-to-red colormap for overlay rendering.
fn colormap(v: f64) -> [u8; 3] {
    let v = v.clamp(0.0, 1.0);
    let r = (255.0 * (1.5 * v - 0.25).clamp(0.0, 1.0)) as u8;
    let g = (255.0 * (1.0 - (2.0 * v - 1.0).abs()).clamp(0.0, 1.0)) as u8;
    let b = (255.0 * (1.25 - 1.5 * v).clamp(0.0, 1.0)) as u8;
    [r, g, b]
}

/// Blends the relevance colormap over the (letterboxed) image.
pub fn overlay(model: &ImageModel, img: &ImageTensor, map: &Heatmap) -> ImageTensor {
    let boxed = img.letterbox(model.arch.input_side);
    ImageTensor::from_fn(boxed.width(), boxed.height(), |x, y| {
        let v = map.data[y as usize * map.w + x as usize];
        let c = colormap(v);
        let p = boxed.px(x, y);
        let mut out = [0u8; 3];
        for i in 0..3 {
            out[i] = (0.55 * p[i] as f64 + 0.45 * c[i] as f64).round() as u8;
        }
        out
    })
}

/// One gallery row per reviewed item.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GalleryRow {
    pub id: String,
    pub predicted: Category,
    pub confidence: f64,
    pub peak_x: usize,
    pub peak_y: usize,
    pub original_path: String,
    pub overlay_path: String,
}

/// Writes original/overlay pairs plus `manifest.csv` sorted by confidence
/// descending; that ordering is the triage queue, most confident first.
pub fn export_cam_gallery(
    model: &ImageModel,
    items: &[(String, ImageTensor, Category, ClassScores)],
    out_dir: &Path,
) -> Result<Vec<GalleryRow>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut rows = Vec::with_capacity(items.len());
    for (id, img, predicted, scores) in items {
        let map = cam(model, img, *predicted)?;
        let (peak_x, peak_y) = map.peak();
        let original_path = out_dir.join(format!("{id}__orig.png"));
        let overlay_path = out_dir.join(format!("{id}__cam.png"));
        img.letterbox(model.arch.input_side).write(&original_path)?;
        overlay(model, img, &map).write(&overlay_path)?;
        rows.push(GalleryRow {
            id: id.clone(),
            predicted: *predicted,
            confidence: scores.prob(*predicted),
            peak_x,
            peak_y,
            original_path: original_path.to_string_lossy().into_owned(),
            overlay_path: overlay_path.to_string_lossy().into_owned(),
        });
    }
    rows.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .expect("confidences are finite")
            .then_with(|| a.id.cmp(&b.id))
    });

    let manifest = out_dir.join("manifest.csv");
    let mut w = csv::Writer::from_path(&manifest)?;
    w.write_record(["id", "predicted", "confidence", "peak_x", "peak_y"])?;
    for row in &rows {
        w.write_record([
            row.id.clone(),
            row.predicted.name().to_string(),
            format!("{}", row.confidence),
            format!("{}", row.peak_x),
            format!("{}", row.peak_y),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&manifest, e))?;
    Ok(rows)
}

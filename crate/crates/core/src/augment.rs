//! Deterministic, label-preserving image augmentation.
//!
//! Six transform families are supported: contrast normalization, affine,
//! perspective, sharpen, Gaussian blur, and padding. Every transform is a
//! pure function of (image, parameters), so a dataset expansion is
//! reproducible bit for bit from its seed. Geometric transforms sample onto
//! a same-size canvas with edge replication; only padding changes the
//! output dimensions (by exactly `2 * pad` on each axis).

use crate::category::Category;
use crate::error::{Error, Result};
use crate::linalg;
use crate::raster::ImageTensor;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};

/// The six transform families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AugmentKind {
    ContrastNormalization,
    Affine,
    Perspective,
    Sharpen,
    GaussianBlur,
    Padding,
}

impl AugmentKind {
    pub const ALL: [AugmentKind; 6] = [
        AugmentKind::ContrastNormalization,
        AugmentKind::Affine,
        AugmentKind::Perspective,
        AugmentKind::Sharpen,
        AugmentKind::GaussianBlur,
        AugmentKind::Padding,
    ];

    /// Short name used in output file names (`<orig_id>__<kind>.<ext>`).
    pub fn slug(self) -> &'static str {
        match self {
            AugmentKind::ContrastNormalization => "contrast",
            AugmentKind::Affine => "affine",
            AugmentKind::Perspective => "perspective",
            AugmentKind::Sharpen => "sharpen",
            AugmentKind::GaussianBlur => "blur",
            AugmentKind::Padding => "pad",
        }
    }
}

/// A fully parameterized transform. Construct directly, or draw parameters
/// from the documented label-safe ranges with [`Augmentation::sample`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Augmentation {
    /// `out = 128 + gain * (in - 128)`, clamped. Valid gain: (0, 4].
    ContrastNormalization { gain: f64 },
    /// Rotation (degrees, |r| <= 45) and isotropic scale ((0, 4]) about the
    /// image center.
    Affine { rotate_deg: f64, scale: f64 },
    /// Corner displacements as fractions of width/height, order
    /// top-left, top-right, bottom-right, bottom-left. |offset| <= 0.2.
    Perspective { corner_offsets: [[f64; 2]; 4] },
    /// Unsharp masking, `out = in + amount * (in - blur(in))`. amount in [0, 4].
    Sharpen { amount: f64 },
    /// Gaussian blur with sigma in [0, 8]; sigma = 0 is the identity.
    GaussianBlur { sigma: f64 },
    /// Edge-replicated border of `pad` pixels on all sides. pad <= 1024.
    Padding { pad: u32 },
}

impl Augmentation {
    pub fn kind(&self) -> AugmentKind {
        match self {
            Augmentation::ContrastNormalization { .. } => AugmentKind::ContrastNormalization,
            Augmentation::Affine { .. } => AugmentKind::Affine,
            Augmentation::Perspective { .. } => AugmentKind::Perspective,
            Augmentation::Sharpen { .. } => AugmentKind::Sharpen,
            Augmentation::GaussianBlur { .. } => AugmentKind::GaussianBlur,
            Augmentation::Padding { .. } => AugmentKind::Padding,
        }
    }

    /// Draws parameters from the label-safe sampling ranges:
    /// gain [0.75, 1.5], rotation [-15, 15] degrees, scale [0.9, 1.1],
    /// corner jitter up to 8% of the edge, sharpen amount [0.5, 1.0],
    /// blur sigma [0.5, 2.0], padding [5, 25] px.
    pub fn sample(kind: AugmentKind, rng: &mut impl RngExt) -> Augmentation {
        match kind {
            AugmentKind::ContrastNormalization => Augmentation::ContrastNormalization {
                gain: rng.random_range(0.75..=1.5),
            },
            AugmentKind::Affine => Augmentation::Affine {
                rotate_deg: rng.random_range(-15.0..=15.0),
                scale: rng.random_range(0.9..=1.1),
            },
            AugmentKind::Perspective => {
                let mut corner_offsets = [[0.0; 2]; 4];
                for corner in &mut corner_offsets {
                    corner[0] = rng.random_range(-0.08..=0.08);
                    corner[1] = rng.random_range(-0.08..=0.08);
                }
                Augmentation::Perspective { corner_offsets }
            }
            AugmentKind::Sharpen => Augmentation::Sharpen {
                amount: rng.random_range(0.5..=1.0),
            },
            AugmentKind::GaussianBlur => Augmentation::GaussianBlur {
                sigma: rng.random_range(0.5..=2.0),
            },
            AugmentKind::Padding => Augmentation::Padding {
                pad: rng.random_range(5..=25),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Augmentation::ContrastNormalization { gain } => {
                gain.is_finite() && *gain > 0.0 && *gain <= 4.0
            }
            Augmentation::Affine { rotate_deg, scale } => {
                rotate_deg.is_finite()
                    && rotate_deg.abs() <= 45.0
                    && scale.is_finite()
                    && *scale > 0.0
                    && *scale <= 4.0
            }
            Augmentation::Perspective { corner_offsets } => corner_offsets
                .iter()
                .flatten()
                .all(|o| o.is_finite() && o.abs() <= 0.2),
            Augmentation::Sharpen { amount } => {
                amount.is_finite() && (0.0..=4.0).contains(amount)
            }
            Augmentation::GaussianBlur { sigma } => sigma.is_finite() && (0.0..=8.0).contains(sigma),
            Augmentation::Padding { pad } => *pad <= 1024,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("augmentation parameter out of range: {self:?}")))
        }
    }
}

/// Applies one transform. Same input and spec always produce bit-identical
/// output; the label is preserved by construction.
pub fn apply_transform(img: &ImageTensor, spec: &Augmentation) -> Result<ImageTensor> {
    spec.validate()?;
    let out = match spec {
        Augmentation::ContrastNormalization { gain } => contrast(img, *gain),
        Augmentation::Affine { rotate_deg, scale } => affine(img, *rotate_deg, *scale),
        Augmentation::Perspective { corner_offsets } => perspective(img, corner_offsets)?,
        Augmentation::Sharpen { amount } => sharpen(img, *amount),
        Augmentation::GaussianBlur { sigma } => gaussian_blur(img, *sigma),
        Augmentation::Padding { pad } => pad_edges(img, *pad),
    };
    Ok(out)
}

fn contrast(img: &ImageTensor, gain: f64) -> ImageTensor {
    ImageTensor::from_fn(img.width(), img.height(), |x, y| {
        let p = img.px(x, y);
        let mut out = [0u8; 3];
        for c in 0..3 {
            out[c] = (128.0 + gain * (p[c] as f64 - 128.0)).round().clamp(0.0, 255.0) as u8;
        }
        out
    })
}

fn affine(img: &ImageTensor, rotate_deg: f64, scale: f64) -> ImageTensor {
    let theta = rotate_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    let cx = (img.width() as f64 - 1.0) / 2.0;
    let cy = (img.height() as f64 - 1.0) / 2.0;
    ImageTensor::from_fn(img.width(), img.height(), |x, y| {
        // Inverse map: rotate by -theta and divide out the scale.
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let sx = cx + (cos * dx + sin * dy) / scale;
        let sy = cy + (-sin * dx + cos * dy) / scale;
        img.sample_bilinear(sx, sy)
    })
}

fn perspective(img: &ImageTensor, corner_offsets: &[[f64; 2]; 4]) -> Result<ImageTensor> {
    let w = img.width() as f64 - 1.0;
    let h = img.height() as f64 - 1.0;
    let dst = [[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]];
    let src: Vec<[f64; 2]> = dst
        .iter()
        .zip(corner_offsets)
        .map(|(d, o)| {
            [
                d[0] + o[0] * img.width() as f64,
                d[1] + o[1] * img.height() as f64,
            ]
        })
        .collect();

    // Homography H with h33 = 1 sending each output corner to its source
    // sample point: two rows of the 8x8 system per correspondence.
    let mut a = vec![0.0; 64];
    let mut b = vec![0.0; 8];
    for (i, (d, s)) in dst.iter().zip(&src).enumerate() {
        let (x, y) = (d[0], d[1]);
        let (u, v) = (s[0], s[1]);
        let r0 = 2 * i;
        let r1 = 2 * i + 1;
        a[r0 * 8] = x;
        a[r0 * 8 + 1] = y;
        a[r0 * 8 + 2] = 1.0;
        a[r0 * 8 + 6] = -u * x;
        a[r0 * 8 + 7] = -u * y;
        b[r0] = u;
        a[r1 * 8 + 3] = x;
        a[r1 * 8 + 4] = y;
        a[r1 * 8 + 5] = 1.0;
        a[r1 * 8 + 6] = -v * x;
        a[r1 * 8 + 7] = -v * y;
        b[r1] = v;
    }
    let hm = linalg::solve(&a, &b, 8)
        .ok_or_else(|| Error::invalid("degenerate perspective corner placement"))?;

    Ok(ImageTensor::from_fn(img.width(), img.height(), |x, y| {
        let (x, y) = (x as f64, y as f64);
        let denom = hm[6] * x + hm[7] * y + 1.0;
        let sx = (hm[0] * x + hm[1] * y + hm[2]) / denom;
        let sy = (hm[3] * x + hm[4] * y + hm[5]) / denom;
        img.sample_bilinear(sx, sy)
    }))
}

fn sharpen(img: &ImageTensor, amount: f64) -> ImageTensor {
    let blurred = gaussian_blur(img, 1.0);
    ImageTensor::from_fn(img.width(), img.height(), |x, y| {
        let p = img.px(x, y);
        let b = blurred.px(x, y);
        let mut out = [0u8; 3];
        for c in 0..3 {
            let v = p[c] as f64 + amount * (p[c] as f64 - b[c] as f64);
            out[c] = v.round().clamp(0.0, 255.0) as u8;
        }
        out
    })
}

fn gaussian_blur(img: &ImageTensor, sigma: f64) -> ImageTensor {
    if sigma == 0.0 {
        return img.clone();
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    for i in -radius..=radius {
        kernel.push((-(i as f64).powi(2) / (2.0 * sigma * sigma)).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }

    let (w, h) = (img.width() as i64, img.height() as i64);
    // Horizontal pass into a float buffer, vertical pass out of it, one
    // rounding at the end.
    let mut tmp = vec![0.0f64; (w * h * 3) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (ki, k) in kernel.iter().enumerate() {
                let sx = x + ki as i64 - radius;
                let p = img.px_clamped(sx, y);
                for c in 0..3 {
                    acc[c] += k * p[c] as f64;
                }
            }
            let base = ((y * w + x) * 3) as usize;
            tmp[base..base + 3].copy_from_slice(&acc);
        }
    }
    let mut out = ImageTensor::new(img.width(), img.height());
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (ki, k) in kernel.iter().enumerate() {
                let sy = (y + ki as i64 - radius).clamp(0, h - 1);
                let base = ((sy * w + x) * 3) as usize;
                for c in 0..3 {
                    acc[c] += k * tmp[base + c];
                }
            }
            out.set_px(
                x as u32,
                y as u32,
                [
                    acc[0].round().clamp(0.0, 255.0) as u8,
                    acc[1].round().clamp(0.0, 255.0) as u8,
                    acc[2].round().clamp(0.0, 255.0) as u8,
                ],
            );
        }
    }
    out
}

fn pad_edges(img: &ImageTensor, pad: u32) -> ImageTensor {
    if pad == 0 {
        return img.clone();
    }
    let p = pad as i64;
    ImageTensor::from_fn(img.width() + 2 * pad, img.height() + 2 * pad, |x, y| {
        img.px_clamped(x as i64 - p, y as i64 - p)
    })
}

/// Applies every spec to every item. The output keeps each original
/// followed by its augmented copies, labels unchanged, so
/// `output.len() == items.len() * (1 + specs.len())`.
pub fn augment_dataset(
    items: &[(ImageTensor, Category)],
    specs: &[Augmentation],
) -> Result<Vec<(ImageTensor, Category)>> {
    let mut out = Vec::with_capacity(items.len() * (1 + specs.len()));
    for (img, label) in items {
        out.push((img.clone(), *label));
        for spec in specs {
            out.push((apply_transform(img, spec)?, *label));
        }
    }
    Ok(out)
}

/// Per-item transform plan that expands `n_items` originals to exactly
/// `target` outputs by sampling transform kinds per image without
/// replacement. Kinds and parameters are drawn from per-item rngs derived
/// from `(seed, item index)`, so serial and parallel application agree.
pub fn plan_target_expansion(
    n_items: usize,
    target: usize,
    seed: u64,
) -> Result<Vec<Vec<Augmentation>>> {
    if n_items == 0 {
        return Err(Error::invalid("cannot expand an empty dataset"));
    }
    if target < n_items {
        return Err(Error::invalid(format!(
            "target {target} is below the original count {n_items}"
        )));
    }
    let extras = target - n_items;
    let max = n_items * AugmentKind::ALL.len();
    if extras > max {
        return Err(Error::invalid(format!(
            "target {target} needs {extras} augmented copies but only {max} are possible \
             without repeating a transform on an image"
        )));
    }

    let base = extras / n_items;
    let remainder = extras % n_items;
    // Which items receive one extra copy: a seeded shuffle of the indices.
    let mut order: Vec<usize> = (0..n_items).collect();
    let mut rng = StdRng::seed_from_u64(seed);
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut counts = vec![base; n_items];
    for &idx in order.iter().take(remainder) {
        counts[idx] += 1;
    }

    let mut plan = Vec::with_capacity(n_items);
    for (i, &k) in counts.iter().enumerate() {
        let mut item_rng = StdRng::seed_from_u64(crate::derive_seed(seed, i as u64));
        let mut kinds = AugmentKind::ALL.to_vec();
        for a in (1..kinds.len()).rev() {
            let b = item_rng.random_range(0..=a);
            kinds.swap(a, b);
        }
        let specs = kinds
            .into_iter()
            .take(k)
            .map(|kind| Augmentation::sample(kind, &mut item_rng))
            .collect();
        plan.push(specs);
    }
    Ok(plan)
}

/// Expands a dataset to exactly `target` items using [`plan_target_expansion`].
pub fn augment_to_target(
    items: &[(ImageTensor, Category)],
    target: usize,
    seed: u64,
) -> Result<Vec<(ImageTensor, Category)>> {
    let plan = plan_target_expansion(items.len(), target, seed)?;
    let mut out = Vec::with_capacity(target);
    for ((img, label), specs) in items.iter().zip(&plan) {
        out.push((img.clone(), *label));
        for spec in specs {
            out.push((apply_transform(img, spec)?, *label));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noisy(side: u32, seed: u64) -> ImageTensor {
        let mut rng = StdRng::seed_from_u64(seed);
        ImageTensor::from_fn(side, side, |_, _| {
            [rng.random(), rng.random(), rng.random()]
        })
    }

    #[test]
    fn blur_sigma_zero_is_identity() {
        let img = noisy(16, 1);
        let out = apply_transform(&img, &Augmentation::GaussianBlur { sigma: 0.0 }).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn identity_affine_is_identity() {
        let img = noisy(16, 2);
        let out = apply_transform(
            &img,
            &Augmentation::Affine {
                rotate_deg: 0.0,
                scale: 1.0,
            },
        )
        .unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn zero_offset_perspective_is_identity() {
        let img = noisy(12, 3);
        let out = apply_transform(
            &img,
            &Augmentation::Perspective {
                corner_offsets: [[0.0; 2]; 4],
            },
        )
        .unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn padding_grows_both_dimensions_by_twice_pad() {
        let img = noisy(20, 4);
        let out = apply_transform(&img, &Augmentation::Padding { pad: 10 }).unwrap();
        assert_eq!((out.width(), out.height()), (40, 40));
        // Border replicates the nearest edge pixel.
        assert_eq!(out.px(0, 0), img.px(0, 0));
        assert_eq!(out.px(39, 39), img.px(19, 19));
        // Interior is the original.
        assert_eq!(out.px(10, 10), img.px(0, 0));
    }

    #[test]
    fn non_padding_transforms_preserve_dimensions() {
        let img = noisy(17, 5);
        for kind in AugmentKind::ALL {
            if kind == AugmentKind::Padding {
                continue;
            }
            let mut rng = StdRng::seed_from_u64(9);
            let spec = Augmentation::sample(kind, &mut rng);
            let out = apply_transform(&img, &spec).unwrap();
            assert_eq!((out.width(), out.height()), (17, 17), "{kind:?}");
        }
    }

    #[test]
    fn same_spec_is_bit_identical() {
        let img = noisy(16, 6);
        let mut rng = StdRng::seed_from_u64(11);
        for kind in AugmentKind::ALL {
            let spec = Augmentation::sample(kind, &mut rng);
            let a = apply_transform(&img, &spec).unwrap();
            let b = apply_transform(&img, &spec).unwrap();
            assert_eq!(a, b, "{kind:?}");
        }
    }

    #[test]
    fn out_of_range_parameters_error() {
        let img = noisy(8, 7);
        assert!(apply_transform(&img, &Augmentation::GaussianBlur { sigma: -1.0 }).is_err());
        assert!(apply_transform(&img, &Augmentation::ContrastNormalization { gain: 0.0 }).is_err());
        assert!(apply_transform(
            &img,
            &Augmentation::Affine {
                rotate_deg: 90.0,
                scale: 1.0
            }
        )
        .is_err());
    }

    #[test]
    fn dataset_size_law() {
        let items: Vec<(ImageTensor, Category)> = (0..10)
            .map(|i| (noisy(8, i), Category::ALL[i as usize % 15]))
            .collect();
        let mut rng = StdRng::seed_from_u64(13);
        let specs: Vec<Augmentation> = AugmentKind::ALL
            .iter()
            .map(|k| Augmentation::sample(*k, &mut rng))
            .collect();
        let out = augment_dataset(&items, &specs).unwrap();
        assert_eq!(out.len(), 70);
        // Labels are copied unchanged, originals kept.
        for (i, chunk) in out.chunks(7).enumerate() {
            assert!(chunk.iter().all(|(_, l)| *l == items[i].1));
            assert_eq!(chunk[0].0, items[i].0);
        }

        let none = augment_dataset(&items, &[]).unwrap();
        assert_eq!(none.len(), items.len());
    }

    #[test]
    fn target_expansion_is_exact_and_seeded() {
        let plan = plan_target_expansion(50, 188, 42).unwrap();
        let total: usize = plan.iter().map(|s| 1 + s.len()).sum();
        assert_eq!(total, 188);
        // No kind repeats within an item.
        for specs in &plan {
            let mut kinds: Vec<AugmentKind> = specs.iter().map(|s| s.kind()).collect();
            kinds.sort_by_key(|k| k.slug());
            kinds.dedup();
            assert_eq!(kinds.len(), specs.len());
        }
        assert_eq!(plan, plan_target_expansion(50, 188, 42).unwrap());
        assert_ne!(plan, plan_target_expansion(50, 188, 43).unwrap());

        assert!(plan_target_expansion(10, 71, 1).is_err()); // > 7x
        assert!(plan_target_expansion(10, 5, 1).is_err());
        assert!(plan_target_expansion(0, 5, 1).is_err());
    }

    #[test]
    fn target_expansion_applies() {
        let items: Vec<(ImageTensor, Category)> =
            (0..6).map(|i| (noisy(8, i), Category::Fire)).collect();
        let out = augment_to_target(&items, 17, 3).unwrap();
        assert_eq!(out.len(), 17);
        assert!(out.iter().all(|(_, l)| *l == Category::Fire));
    }
}

//! Synthetic corpus generation with planted ground truth.
//!
//! Every estimator in this crate is verified against corpora produced
//! here: each post gets a known category, text drawn from that category's
//! keyword pool, an optionally rendered motif image, known covariates, and
//! a survival time drawn from an exponential hazard
//! `lambda0 * exp(x . beta*)`. Posts are created uniformly over the
//! observation window and right-censored at its end, so record building
//! over the emitted corpus reproduces the planted data exactly.

use crate::analytics::SurvivalRecord;
use crate::category::Category;
use crate::corpus::Post;
use crate::error::{Error, Result};
use crate::raster::ImageTensor;
use chrono::{DateTime, TimeZone, Utc};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

/// Procedural motif drawn over the noise background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Circle,
    Square,
    Triangle,
    Diamond,
    Ring,
    Cross,
    HBar,
    VBar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Motif {
    pub shape: Shape,
    pub color: [u8; 3],
}

/// Keyword pool and motif for one planted topic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryProfile {
    pub category: Category,
    pub keywords: Vec<String>,
    pub motif: Motif,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImageMode {
    /// No image files; posts carry no image refs. Fast path for
    /// analytics-only runs.
    Skip,
    /// Render square motif images of the given side.
    Render { side: u32 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Planted topics; must have pairwise disjoint keyword pools.
    pub profiles: Vec<CategoryProfile>,
    /// Shared vocabulary mixed into every post.
    pub filler_pool: Vec<String>,
    pub positive_lexicon: Vec<String>,
    pub negative_lexicon: Vec<String>,
    /// Upper bounds on injected positive/negative lexicon tokens per post.
    pub max_positive: usize,
    pub max_negative: usize,
    /// Poisson means for the virality counts; zero pins the count to zero.
    pub repost_mean: f64,
    pub comment_mean: f64,
    /// Baseline hazard in events per minute.
    pub baseline_hazard: f64,
    /// True coefficients in covariate order image, text, reposts,
    /// comments, sentiment.
    pub true_beta: [f64; 5],
    /// Observation window length in minutes; creations are uniform over it.
    pub window_minutes: f64,
    /// Fraction of posts planted as Other (filler text, no motif).
    pub other_fraction: f64,
    /// Fraction of deletions emitted as voluntary rather than censored.
    pub voluntary_fraction: f64,
    pub n_posts: usize,
    pub image_mode: ImageMode,
    pub seed: u64,
}

impl GeneratorConfig {
    /// All fourteen topics with derived keyword pools and distinct motifs.
    pub fn default_with(n_posts: usize, seed: u64, image_mode: ImageMode) -> GeneratorConfig {
        let shapes = [
            Shape::Circle,
            Shape::Square,
            Shape::Triangle,
            Shape::Diamond,
            Shape::Ring,
            Shape::Cross,
            Shape::HBar,
            Shape::VBar,
        ];
        // All vocabulary entries are single alphanumeric tokens so they
        // survive tokenization intact (the lexicon scorer matches tokens).
        let profiles = Category::topics()
            .enumerate()
            .map(|(i, category)| CategoryProfile {
                category,
                keywords: (0..4)
                    .map(|k| format!("kw{}{k}", category.slug().replace('_', "")))
                    .collect(),
                motif: Motif {
                    shape: shapes[i % shapes.len()],
                    color: hue_color(i, 14),
                },
            })
            .collect();
        GeneratorConfig {
            profiles,
            filler_pool: (0..12).map(|i| format!("filler{i}")).collect(),
            positive_lexicon: (0..6).map(|i| format!("plex{i}")).collect(),
            negative_lexicon: (0..6).map(|i| format!("nlex{i}")).collect(),
            max_positive: 4,
            max_negative: 4,
            repost_mean: 3.0,
            comment_mean: 5.0,
            baseline_hazard: 1.0 / 600.0,
            true_beta: [0.0; 5],
            window_minutes: 4.0 * 24.0 * 60.0,
            other_fraction: 1.0 / 15.0,
            voluntary_fraction: 0.0,
            n_posts,
            image_mode,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.profiles.is_empty() {
            return Err(Error::invalid("no category profiles"));
        }
        if !(self.baseline_hazard > 0.0) {
            return Err(Error::invalid("baseline hazard must be positive"));
        }
        if !(self.window_minutes > 0.0) {
            return Err(Error::invalid("window must be positive"));
        }
        if self.n_posts == 0 {
            return Err(Error::invalid("n_posts must be positive"));
        }
        for profile in &self.profiles {
            if profile.keywords.is_empty() {
                return Err(Error::invalid(format!(
                    "profile {} has no keywords",
                    profile.category
                )));
            }
        }
        // Keyword pools must be pairwise disjoint, including no
        // substring collisions, or keyword partitioning is ambiguous.
        for a in &self.profiles {
            for b in &self.profiles {
                if a.category == b.category {
                    continue;
                }
                for ka in &a.keywords {
                    for kb in &b.keywords {
                        if ka.contains(kb.as_str()) {
                            return Err(Error::invalid(format!(
                                "keyword {ka:?} of {} collides with {kb:?} of {}",
                                a.category, b.category
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn hue_color(i: usize, n: usize) -> [u8; 3] {
    // Evenly spaced hues at full saturation/value.
    let h = i as f64 / n as f64 * 6.0;
    let x = (1.0 - (h % 2.0 - 1.0).abs()) * 255.0;
    let x = x as u8;
    match h as usize {
        0 => [255, x, 0],
        1 => [x, 255, 0],
        2 => [0, 255, x],
        3 => [0, x, 255],
        4 => [x, 0, 255],
        _ => [255, 0, x],
    }
}

/// Planted facts about one generated post.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthRow {
    pub post_id: String,
    pub category: Category,
    pub image_match: bool,
    pub text_match: bool,
    pub reposts: u64,
    pub comments: u64,
    pub sentiment: f64,
    /// The drawn (uncensored) event time in minutes.
    pub event_time_minutes: f64,
    /// Whether deletion was observed inside the window as censorship.
    pub observed_event: bool,
}

/// A generated corpus with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub posts: Vec<Post>,
    /// (image id, pixels); empty under [`ImageMode::Skip`].
    pub images: Vec<(String, ImageTensor)>,
    pub truth: Vec<TruthRow>,
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
}

/// Generates a corpus. Bit-identical for equal configs; per-post state is
/// derived from `(seed, index)` so generation order never matters.
pub fn generate_corpus(config: &GeneratorConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let window_start = Utc.with_ymd_and_hms(2016, 1, 1, 0, 0, 0).unwrap();
    let window_end =
        window_start + chrono::Duration::milliseconds((config.window_minutes * 60_000.0) as i64);

    let mut posts = Vec::with_capacity(config.n_posts);
    let mut images = Vec::new();
    let mut truth = Vec::with_capacity(config.n_posts);

    for i in 0..config.n_posts {
        let mut rng = StdRng::seed_from_u64(crate::derive_seed(config.seed, i as u64));
        let post_id = format!("post_{i:06}");

        let is_other = rng.random_bool(config.other_fraction.clamp(0.0, 1.0));
        let profile = if is_other {
            None
        } else {
            Some(&config.profiles[rng.random_range(0..config.profiles.len())])
        };

        // Which modalities carry the planted topic.
        let (image_match, text_match) = if profile.is_some() {
            match rng.random_range(0..4u32) {
                0 | 1 => (true, true),
                2 => (true, false),
                _ => (false, true),
            }
        } else {
            (rng.random_bool(0.5), false)
        };

        let mut tokens: Vec<String> = Vec::new();
        if let (Some(profile), true) = (profile, text_match) {
            let n_kw = rng.random_range(2..=3.min(profile.keywords.len()));
            for k in 0..n_kw {
                tokens.push(profile.keywords[k].clone());
            }
        }
        let n_filler = rng.random_range(3..=6.min(config.filler_pool.len()));
        for _ in 0..n_filler {
            tokens.push(config.filler_pool[rng.random_range(0..config.filler_pool.len())].clone());
        }
        let n_pos = if config.max_positive > 0 {
            rng.random_range(0..=config.max_positive)
        } else {
            0
        };
        let n_neg = if config.max_negative > 0 {
            rng.random_range(0..=config.max_negative)
        } else {
            0
        };
        for k in 0..n_pos {
            tokens.push(config.positive_lexicon[k % config.positive_lexicon.len()].clone());
        }
        for k in 0..n_neg {
            tokens.push(config.negative_lexicon[k % config.negative_lexicon.len()].clone());
        }
        for idx in (1..tokens.len()).rev() {
            let j = rng.random_range(0..=idx);
            tokens.swap(idx, j);
        }
        let text = tokens.join(" ");

        // The sentiment covariate is exactly what the lexicon scorer will
        // measure on this text.
        let balance = (n_pos as f64 - n_neg as f64) / (n_pos + n_neg).max(1) as f64;
        let sentiment = 2.0 + 2.0 * balance;

        let reposts = sample_count(config.repost_mean, &mut rng);
        let comments = sample_count(config.comment_mean, &mut rng);

        let covariates = [
            image_match as u8 as f64,
            text_match as u8 as f64,
            reposts as f64,
            comments as f64,
            sentiment,
        ];
        let linear: f64 = covariates
            .iter()
            .zip(&config.true_beta)
            .map(|(x, b)| x * b)
            .sum();
        let hazard = config.baseline_hazard * linear.exp();
        let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
        let event_time = -u.ln() / hazard;

        let created_offset = rng.random_range(0.0..config.window_minutes);
        let created_at =
            window_start + chrono::Duration::milliseconds((created_offset * 60_000.0) as i64);
        let horizon = config.window_minutes - created_offset;

        let (deleted_at, deletion_message, observed_event) = if event_time <= horizon {
            let deleted =
                created_at + chrono::Duration::milliseconds((event_time * 60_000.0) as i64);
            if config.voluntary_fraction > 0.0 && rng.random_bool(config.voluntary_fraction) {
                (Some(deleted), Some("weibo does not exist".to_string()), false)
            } else {
                (Some(deleted), Some("permission denied".to_string()), true)
            }
        } else {
            (None, None, false)
        };

        let mut image_refs = Vec::new();
        if image_match {
            if let ImageMode::Render { side } = config.image_mode {
                let image_id = format!("img_{i:06}");
                let motif = profile.map(|p| p.motif);
                images.push((image_id.clone(), render_motif(side, motif, &mut rng)));
                image_refs.push(image_id);
            }
        }

        posts.push(Post {
            id: post_id.clone(),
            user_id: format!("user_{:03}", rng.random_range(0..500u32)),
            text,
            image_refs,
            created_at,
            deleted_at,
            deletion_message,
            repost_count: reposts,
            comment_count: comments,
        });
        truth.push(TruthRow {
            post_id,
            category: profile.map(|p| p.category).unwrap_or(Category::Other),
            image_match,
            text_match,
            reposts,
            comments,
            sentiment,
            event_time_minutes: event_time,
            observed_event,
        });
    }

    Ok(SyntheticCorpus {
        posts,
        images,
        truth,
        window_start,
        window_end,
    })
}

fn sample_count(mean: f64, rng: &mut StdRng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let poisson = Poisson::new(mean).expect("positive mean");
    let v: f64 = poisson.sample(rng);
    v.max(0.0) as u64
}

/// Renders a motif (or a bare noise background for `None`) on a dark noisy
/// canvas with jittered position and size.
pub fn render_motif(side: u32, motif: Option<Motif>, rng: &mut StdRng) -> ImageTensor {
    let mut img = {
        let mut noise_rng = StdRng::seed_from_u64(rng.random());
        ImageTensor::from_fn(side, side, move |_, _| {
            [noise_rng.random_range(0..60u16) as u8; 3]
        })
    };
    let Some(motif) = motif else { return img };

    let s = side as f64;
    let cx = s * rng.random_range(0.35..0.65);
    let cy = s * rng.random_range(0.35..0.65);
    let r = s * rng.random_range(0.22..0.36);
    let color = motif.color;

    for y in 0..side {
        for x in 0..side {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let inside = match motif.shape {
                Shape::Circle => dx * dx + dy * dy <= r * r,
                Shape::Square => dx.abs() <= r && dy.abs() <= r,
                Shape::Triangle => dy >= -r && dy <= r && dx.abs() <= (dy + r) / 2.0,
                Shape::Diamond => dx.abs() + dy.abs() <= r,
                Shape::Ring => {
                    let d2 = dx * dx + dy * dy;
                    d2 <= r * r && d2 >= (0.55 * r) * (0.55 * r)
                }
                Shape::Cross => dx.abs() <= r * 0.35 || dy.abs() <= r * 0.35,
                Shape::HBar => dy.abs() <= r * 0.4 && dx.abs() <= r,
                Shape::VBar => dx.abs() <= r * 0.4 && dy.abs() <= r,
            };
            if inside {
                img.set_px(x, y, color);
            }
        }
    }
    img
}

/// Perfect per-id classifier views of the ground truth, used to isolate
/// analytics behavior from classifier error.
pub struct OracleClassifier {
    planted: HashMap<String, Category>,
    image_decisions: HashMap<String, Category>,
    text_decisions: HashMap<String, Category>,
    sentiments: HashMap<String, f64>,
}

impl OracleClassifier {
    pub fn from_truth(truth: &[TruthRow]) -> OracleClassifier {
        let mut planted = HashMap::new();
        let mut image_decisions = HashMap::new();
        let mut text_decisions = HashMap::new();
        let mut sentiments = HashMap::new();
        for row in truth {
            planted.insert(row.post_id.clone(), row.category);
            if row.image_match {
                image_decisions.insert(row.post_id.clone(), row.category);
            }
            let text_label = if row.text_match {
                row.category
            } else {
                Category::Other
            };
            text_decisions.insert(row.post_id.clone(), text_label);
            sentiments.insert(row.post_id.clone(), row.sentiment);
        }
        OracleClassifier {
            planted,
            image_decisions,
            text_decisions,
            sentiments,
        }
    }

    /// The planted category of a post.
    pub fn classify(&self, post_id: &str) -> Option<Category> {
        self.planted.get(post_id).copied()
    }

    /// Per-post image decision (absent when the post has no image).
    pub fn image_decisions(&self) -> &HashMap<String, Category> {
        &self.image_decisions
    }

    /// Per-post text decision; filler-only text decides `Other`.
    pub fn text_decisions(&self) -> &HashMap<String, Category> {
        &self.text_decisions
    }

    pub fn sentiments(&self) -> &HashMap<String, f64> {
        &self.sentiments
    }
}

impl SyntheticCorpus {
    /// Survival records for one category straight from the ground truth,
    /// bypassing classifiers entirely.
    pub fn oracle_records(&self, category: Category) -> Vec<SurvivalRecord> {
        let oracle = OracleClassifier::from_truth(&self.truth);
        let corpus = self.to_corpus();
        crate::analytics::build_survival_records(
            &corpus,
            category,
            oracle.image_decisions(),
            oracle.text_decisions(),
            oracle.sentiments(),
            self.window_end,
            &crate::corpus::DeletionMatcher::default(),
        )
        .expect("generated corpus is well formed")
        .records
    }

    pub fn to_corpus(&self) -> crate::corpus::Corpus {
        // Image paths are only known after emission; an in-memory corpus
        // maps refs to placeholder paths.
        let store = self
            .images
            .iter()
            .map(|(id, _)| (id.clone(), std::path::PathBuf::from(format!("{id}.png"))))
            .collect();
        crate::corpus::Corpus::new(
            self.posts.clone(),
            store,
            Some((self.window_start, self.window_end)),
        )
        .expect("generated posts are valid")
    }

    /// Writes the corpus in the pipeline's native layout: `posts.jsonl`,
    /// `images/<id>.png`, `truth.csv`, and the two lexicon files.
    pub fn emit(&self, dir: &Path, config: &GeneratorConfig) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        crate::corpus::write_posts(&dir.join("posts.jsonl"), &self.posts)?;

        let image_dir = dir.join("images");
        std::fs::create_dir_all(&image_dir).map_err(|e| Error::io(&image_dir, e))?;
        for (id, img) in &self.images {
            img.write(&image_dir.join(format!("{id}.png")))?;
        }

        let mut w = csv::Writer::from_path(dir.join("truth.csv"))?;
        w.write_record([
            "post_id",
            "category",
            "image_match",
            "text_match",
            "reposts",
            "comments",
            "sentiment",
            "event_time_minutes",
            "observed_event",
        ])?;
        for row in &self.truth {
            w.write_record([
                row.post_id.clone(),
                row.category.name().to_string(),
                format!("{}", row.image_match as u8),
                format!("{}", row.text_match as u8),
                format!("{}", row.reposts),
                format!("{}", row.comments),
                format!("{}", row.sentiment),
                format!("{}", row.event_time_minutes),
                format!("{}", row.observed_event as u8),
            ])?;
        }
        w.flush().map_err(|e| Error::io(dir, e))?;

        std::fs::write(
            dir.join("lexicon_pos.txt"),
            config.positive_lexicon.join("\n"),
        )
        .map_err(|e| Error::io(dir, e))?;
        std::fs::write(
            dir.join("lexicon_neg.txt"),
            config.negative_lexicon.join("\n"),
        )
        .map_err(|e| Error::io(dir, e))?;
        Ok(())
    }

    /// Labeled image dataset drawn from the planted truth: `per_category`
    /// freshly rendered motifs per profile plus bare backgrounds for
    /// `Other`. Independent of the corpus draws.
    pub fn labeled_images(
        config: &GeneratorConfig,
        per_category: usize,
        seed: u64,
    ) -> Vec<(ImageTensor, Category)> {
        let ImageMode::Render { side } = config.image_mode else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for (pi, profile) in config.profiles.iter().enumerate() {
            for j in 0..per_category {
                let mut rng = StdRng::seed_from_u64(crate::derive_seed(
                    seed,
                    (pi * per_category + j) as u64,
                ));
                out.push((
                    render_motif(side, Some(profile.motif), &mut rng),
                    profile.category,
                ));
            }
        }
        for j in 0..per_category {
            let mut rng =
                StdRng::seed_from_u64(crate::derive_seed(seed, (usize::MAX - j) as u64));
            out.push((render_motif(side, None, &mut rng), Category::Other));
        }
        out
    }

    /// Labeled text dataset from the planted vocabulary pools.
    pub fn labeled_texts(
        config: &GeneratorConfig,
        per_category: usize,
        seed: u64,
    ) -> Vec<(String, Category)> {
        let mut out = Vec::new();
        let text_from = |keywords: Option<&[String]>, rng: &mut StdRng| {
            let mut tokens: Vec<String> = Vec::new();
            if let Some(kw) = keywords {
                let n = rng.random_range(2..=3.min(kw.len()));
                for k in 0..n {
                    tokens.push(kw[k].clone());
                }
            }
            for _ in 0..rng.random_range(3..=6usize) {
                tokens
                    .push(config.filler_pool[rng.random_range(0..config.filler_pool.len())].clone());
            }
            for idx in (1..tokens.len()).rev() {
                let j = rng.random_range(0..=idx);
                tokens.swap(idx, j);
            }
            tokens.join(" ")
        };
        for (pi, profile) in config.profiles.iter().enumerate() {
            for j in 0..per_category {
                let mut rng = StdRng::seed_from_u64(crate::derive_seed(
                    seed ^ 0xABCD,
                    (pi * per_category + j) as u64,
                ));
                out.push((
                    text_from(Some(&profile.keywords), &mut rng),
                    profile.category,
                ));
            }
        }
        for j in 0..per_category {
            let mut rng =
                StdRng::seed_from_u64(crate::derive_seed(seed ^ 0xABCD, (usize::MAX - j) as u64));
            out.push((text_from(None, &mut rng), Category::Other));
        }
        out
    }
}

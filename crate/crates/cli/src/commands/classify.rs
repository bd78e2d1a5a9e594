use crate::commands::{ensure_dir, ingest};
use crate::config::PipelineConfig;
use crate::failure::Failure;
use postmortem::imgclf::ImageModel;
use postmortem::review::ItemSeed;
use postmortem::textclf::TextModel;
use postmortem::{Category, ImageTensor};
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct DecisionRow {
    pub post_id: String,
    pub image_category: Option<Category>,
    pub image_confidence: Option<f64>,
    pub text_category: Category,
    pub text_confidence: f64,
    /// Topics this post belongs to: union of the two decisions, `Other`
    /// excluded.
    pub membership: Vec<Category>,
}

fn model_path(
    flag: Option<PathBuf>,
    configured: &Option<PathBuf>,
    out_root: &Path,
    stage: &str,
) -> Result<PathBuf, Failure> {
    let path = flag
        .or_else(|| configured.clone())
        .unwrap_or_else(|| out_root.join(stage).join("model.json"));
    if !path.exists() {
        return Err(Failure::missing(stage, path.display()));
    }
    Ok(path)
}

enum Decider {
    Models {
        image: Box<ImageModel>,
        text: Box<TextModel>,
        threshold: f64,
    },
    /// Per-post planted decisions from a ground-truth table.
    Oracle(std::collections::HashMap<String, (Category, bool, bool)>),
}

fn load_oracle(
    path: &Path,
) -> Result<std::collections::HashMap<String, (Category, bool, bool)>, Failure> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = std::collections::HashMap::new();
    for record in reader.records() {
        let record = record?;
        let category: Category = record[1]
            .parse()
            .map_err(|e: postmortem::Error| Failure::Runtime(anyhow::Error::new(e)))?;
        out.insert(
            record[0].to_string(),
            (category, &record[2] == "1", &record[3] == "1"),
        );
    }
    Ok(out)
}

pub fn run(
    config: &PipelineConfig,
    image_model_flag: Option<PathBuf>,
    text_model_flag: Option<PathBuf>,
    threshold: Option<f64>,
    oracle: Option<PathBuf>,
) -> Result<(), Failure> {
    let out_root = config.output_dir()?.to_path_buf();
    let (corpus, _meta) = ingest::load_ingested(&out_root)?;
    let decider = match oracle {
        Some(truth_path) => {
            if !truth_path.exists() {
                return Err(Failure::missing("synth", truth_path.display()));
            }
            Decider::Oracle(load_oracle(&truth_path)?)
        }
        None => Decider::Models {
            image: Box::new(ImageModel::load(&model_path(
                image_model_flag,
                &config.image_model,
                &out_root,
                "train-image",
            )?)?),
            text: Box::new(TextModel::load(&model_path(
                text_model_flag,
                &config.text_model,
                &out_root,
                "train-text",
            )?)?),
            threshold: threshold.unwrap_or(config.threshold()),
        },
    };

    let out = out_root.join("classify");
    ensure_dir(&out)?;
    let mut w = csv::Writer::from_path(out.join("decisions.csv"))?;
    w.write_record([
        "post_id",
        "image_category",
        "image_confidence",
        "text_category",
        "text_confidence",
        "membership",
    ])?;
    let seeds_file = std::fs::File::create(out.join("review_items.jsonl"))?;
    let mut seeds = std::io::BufWriter::new(seeds_file);

    let mut classified_images = 0usize;
    for post in &corpus.posts {
        let image_path = corpus.first_image_path(post);
        let (text_category, text_confidence, image_category, image_confidence) = match &decider {
            Decider::Models {
                image,
                text,
                threshold,
            } => {
                let (text_category, text_confidence) = text.predict_text(&post.text).top();
                let (image_category, image_confidence) = match image_path {
                    Some(path) => {
                        classified_images += 1;
                        let scores = image.predict(&ImageTensor::read(path)?);
                        (Some(scores.decide(*threshold)), Some(scores.prob(scores.top().0)))
                    }
                    None => (None, None),
                };
                (text_category, text_confidence, image_category, image_confidence)
            }
            Decider::Oracle(truth) => {
                let (category, image_match, text_match) = truth
                    .get(&post.id)
                    .copied()
                    .ok_or_else(|| {
                        Failure::Runtime(anyhow::anyhow!("post {} absent from truth", post.id))
                    })?;
                let text_category = if text_match { category } else { Category::Other };
                let image_category = image_path.map(|_| {
                    classified_images += 1;
                    if image_match {
                        category
                    } else {
                        Category::Other
                    }
                });
                (text_category, 1.0, image_category, image_category.map(|_| 1.0))
            }
        };

        let mut membership = Vec::new();
        if let Some(c) = image_category {
            if c != Category::Other {
                membership.push(c);
            }
        }
        if text_category != Category::Other && !membership.contains(&text_category) {
            membership.push(text_category);
        }

        w.write_record([
            post.id.clone(),
            image_category.map(|c| c.name().to_string()).unwrap_or_default(),
            image_confidence.map(|p| p.to_string()).unwrap_or_default(),
            text_category.name().to_string(),
            text_confidence.to_string(),
            membership
                .iter()
                .map(|c| c.name())
                .collect::<Vec<_>>()
                .join("|"),
        ])?;

        // Review items carry the decision a human would audit: the gated
        // image decision when there is an image, else the text decision.
        let (decision, confidence) = match (image_category, image_confidence) {
            (Some(c), Some(p)) => (c, p),
            _ => (text_category, text_confidence),
        };
        let seed = ItemSeed {
            id: post.id.clone(),
            image_path: image_path.map(|p| p.to_string_lossy().into_owned()),
            text: (!post.text.is_empty()).then(|| post.text.clone()),
            decision,
            confidence,
            cam_path: None,
        };
        serde_json::to_writer(&mut seeds, &seed)?;
        seeds.write_all(b"\n")?;
    }
    w.flush()?;
    seeds.flush()?;
    println!(
        "classified {} posts ({} with images) into {}",
        corpus.len(),
        classified_images,
        out.display()
    );
    Ok(())
}

pub fn read_decisions(out_root: &Path) -> Result<Vec<DecisionRow>, Failure> {
    let path = out_root.join("classify").join("decisions.csv");
    if !path.exists() {
        return Err(Failure::missing("classify", path.display()));
    }
    let mut reader = csv::Reader::from_path(&path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse_cat = |s: &str| -> Result<Option<Category>, Failure> {
            if s.is_empty() {
                Ok(None)
            } else {
                Ok(Some(s.parse().map_err(|e: postmortem::Error| {
                    Failure::Runtime(anyhow::Error::new(e))
                })?))
            }
        };
        let membership = record[5]
            .split('|')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Category>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::Runtime(anyhow::Error::new(e)))?;
        rows.push(DecisionRow {
            post_id: record[0].to_string(),
            image_category: parse_cat(&record[1])?,
            image_confidence: record[2].parse().ok(),
            text_category: parse_cat(&record[3])?
                .ok_or_else(|| Failure::Runtime(anyhow::anyhow!("missing text category")))?,
            text_confidence: record[4].parse().unwrap_or(0.0),
            membership,
        });
    }
    Ok(rows)
}

pub fn read_review_seeds(out_root: &Path) -> Result<Vec<ItemSeed>, Failure> {
    let path = out_root.join("classify").join("review_items.jsonl");
    if !path.exists() {
        return Err(Failure::missing("classify", path.display()));
    }
    let text = std::fs::read_to_string(&path)?;
    let mut seeds = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        seeds.push(serde_json::from_str(line)?);
    }
    Ok(seeds)
}

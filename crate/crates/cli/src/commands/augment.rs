use crate::commands::ensure_dir;
use crate::config::PipelineConfig;
use crate::datasets::read_labeled_images;
use crate::failure::Failure;
use postmortem::augment::{apply_transform, plan_target_expansion, AugmentKind, Augmentation};
use rand::rngs::StdRng;
use rand::SeedableRng;
use std::path::Path;

pub fn run(
    config: &PipelineConfig,
    dataset: &Path,
    target: Option<usize>,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let seed = seed.unwrap_or(config.seed());
    let out = config.output_dir()?.join("augment");
    ensure_dir(&out)?;
    let items = read_labeled_images(dataset)?;
    if items.is_empty() {
        return Err(Failure::Usage(format!(
            "no labeled images under {}",
            dataset.display()
        )));
    }

    let plan: Vec<Vec<Augmentation>> = match target {
        Some(target) => plan_target_expansion(items.len(), target, seed)?,
        None => {
            let mut rng = StdRng::seed_from_u64(seed);
            (0..items.len())
                .map(|_| {
                    AugmentKind::ALL
                        .iter()
                        .map(|k| Augmentation::sample(*k, &mut rng))
                        .collect()
                })
                .collect()
        }
    };

    let mut manifest = csv::Writer::from_path(out.join("manifest.csv"))?;
    manifest.write_record(["file", "category", "kind", "source_index"])?;
    let mut written = 0usize;
    for (i, ((img, category), specs)) in items.iter().zip(&plan).enumerate() {
        let dir = out.join(category.slug());
        ensure_dir(&dir)?;
        let orig = dir.join(format!("{i:06}__orig.png"));
        img.write(&orig)?;
        manifest.write_record([
            orig.to_string_lossy().as_ref(),
            category.name(),
            "original",
            &i.to_string(),
        ])?;
        written += 1;
        for spec in specs {
            let path = dir.join(format!("{i:06}__{}.png", spec.kind().slug()));
            apply_transform(img, spec)?.write(&path)?;
            manifest.write_record([
                path.to_string_lossy().as_ref(),
                category.name(),
                spec.kind().slug(),
                &i.to_string(),
            ])?;
            written += 1;
        }
    }
    manifest.flush()?;
    println!(
        "augmented {} originals into {} images under {}",
        items.len(),
        written,
        out.display()
    );
    Ok(())
}

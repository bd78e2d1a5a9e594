use crate::commands::{classify, ensure_dir, ingest};
use crate::config::PipelineConfig;
use crate::failure::Failure;
use postmortem::imgclf::{export_cam_gallery, ImageModel};
use postmortem::ImageTensor;
use std::path::PathBuf;

pub fn run(
    config: &PipelineConfig,
    image_model_flag: Option<PathBuf>,
    limit: Option<usize>,
) -> Result<(), Failure> {
    let out_root = config.output_dir()?.to_path_buf();
    let (corpus, _) = ingest::load_ingested(&out_root)?;
    let decisions = classify::read_decisions(&out_root)?;
    let model_path = image_model_flag
        .or_else(|| config.image_model.clone())
        .unwrap_or_else(|| out_root.join("train-image").join("model.json"));
    if !model_path.exists() {
        return Err(Failure::missing("train-image", model_path.display()));
    }
    let model = ImageModel::load(&model_path)?;

    let mut items = Vec::new();
    for row in &decisions {
        let Some(predicted) = row.image_category else { continue };
        let Some(post) = corpus.post(&row.post_id) else { continue };
        let Some(path) = corpus.first_image_path(post) else { continue };
        let img = ImageTensor::read(path)?;
        let scores = model.predict(&img);
        items.push((row.post_id.clone(), img, predicted, scores));
        if let Some(cap) = limit {
            if items.len() >= cap {
                break;
            }
        }
    }

    let out = out_root.join("localize");
    ensure_dir(&out)?;
    let rows = export_cam_gallery(&model, &items, &out)?;
    println!(
        "exported {} gallery pairs and manifest to {}",
        rows.len(),
        out.display()
    );
    Ok(())
}

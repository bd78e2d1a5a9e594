use crate::commands::ensure_dir;
use crate::config::PipelineConfig;
use crate::datasets::read_labeled_images;
use crate::failure::Failure;
use postmortem::imgclf::{train_image_classifier, Architecture, TrainConfig};
use std::path::Path;

pub fn run(
    config: &PipelineConfig,
    dataset: &Path,
    side: Option<u32>,
    epochs: Option<usize>,
    seed: Option<u64>,
    threshold: Option<f64>,
) -> Result<(), Failure> {
    let out = config.output_dir()?.join("train-image");
    ensure_dir(&out)?;
    let data = read_labeled_images(dataset)?;
    let train_config = TrainConfig {
        arch: Architecture {
            input_side: side.unwrap_or(64),
            channels: [8, 16, 24],
        },
        seed: seed.unwrap_or(config.seed()),
        epochs: epochs.unwrap_or(30),
        threshold: threshold.unwrap_or(config.threshold()),
        ..Default::default()
    };
    let outcome = train_image_classifier(&data, &train_config)?;

    let model_path = out.join("model.json");
    outcome.model.save(&model_path)?;
    let mut loss = csv::Writer::from_path(out.join("loss.csv"))?;
    loss.write_record(["epoch", "train_loss", "val_loss", "val_macro_f1"])?;
    for e in &outcome.history {
        loss.write_record([
            e.epoch.to_string(),
            format!("{}", e.train_loss),
            format!("{}", e.val_loss),
            format!("{}", e.val_macro_f1),
        ])?;
    }
    loss.flush()?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    let last = outcome.history.last().expect("at least one epoch");
    println!(
        "trained on {} images; validation macro-F1 {:.3}; saved {}",
        data.len(),
        last.val_macro_f1,
        model_path.display()
    );
    Ok(())
}

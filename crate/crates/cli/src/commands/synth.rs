use crate::commands::ensure_dir;
use crate::config::PipelineConfig;
use crate::datasets::{write_labeled_images, write_labeled_texts};
use crate::failure::Failure;
use postmortem::synth::{generate_corpus, GeneratorConfig, ImageMode, SyntheticCorpus};

#[allow(clippy::too_many_arguments)]
pub fn run(
    config: &PipelineConfig,
    n: usize,
    seed: Option<u64>,
    side: Option<u32>,
    beta: Option<String>,
    window_minutes: Option<f64>,
    hazard: Option<f64>,
    train_per_category: Option<usize>,
) -> Result<(), Failure> {
    let out_root = config.output_dir()?.to_path_buf();
    let out = out_root.join("synth");
    ensure_dir(&out)?;

    let image_mode = match side.unwrap_or(32) {
        0 => ImageMode::Skip,
        s => ImageMode::Render { side: s },
    };
    let mut generator = GeneratorConfig::default_with(n, seed.unwrap_or(config.seed()), image_mode);
    if let Some(spec) = beta {
        let parts: Vec<f64> = spec
            .split(',')
            .map(|p| p.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::Usage(format!("bad --beta {spec:?}: {e}")))?;
        if parts.len() != 5 {
            return Err(Failure::Usage(format!(
                "--beta needs 5 comma-separated values, got {}",
                parts.len()
            )));
        }
        generator.true_beta = [parts[0], parts[1], parts[2], parts[3], parts[4]];
    }
    if let Some(w) = window_minutes {
        generator.window_minutes = w;
    }
    if let Some(h) = hazard {
        generator.baseline_hazard = h;
    }

    let corpus = generate_corpus(&generator)?;
    corpus.emit(&out, &generator)?;
    std::fs::write(
        out.join("generator_config.json"),
        serde_json::to_string_pretty(&generator)?,
    )?;

    let per_category = train_per_category.unwrap_or(40);
    if per_category > 0 {
        if matches!(generator.image_mode, ImageMode::Render { .. }) {
            let images =
                SyntheticCorpus::labeled_images(&generator, per_category, generator.seed ^ 0x51);
            write_labeled_images(&out_root.join("labeled-images"), &images)?;
        }
        let texts =
            SyntheticCorpus::labeled_texts(&generator, per_category, generator.seed ^ 0x52);
        write_labeled_texts(&out_root.join("labeled-texts.csv"), &texts)?;
    }

    let events = corpus.truth.iter().filter(|t| t.observed_event).count();
    println!(
        "generated {} posts ({} removal events, {} images) into {}",
        corpus.posts.len(),
        events,
        corpus.images.len(),
        out.display()
    );
    Ok(())
}

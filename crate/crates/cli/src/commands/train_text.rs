use crate::commands::ensure_dir;
use crate::config::PipelineConfig;
use crate::datasets::read_labeled_texts;
use crate::failure::Failure;
use postmortem::textclf::{crossvalidate, train_text_classifier, TextTrainOptions};
use std::path::Path;

pub fn run(
    config: &PipelineConfig,
    dataset: &Path,
    lambda: Option<f64>,
    min_count: Option<usize>,
    cv: Option<usize>,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let out = config.output_dir()?.join("train-text");
    ensure_dir(&out)?;
    let data = read_labeled_texts(dataset)?;
    let lambda = lambda.unwrap_or(1e-3);
    let opts = TextTrainOptions {
        min_count: min_count.unwrap_or(2),
        ..Default::default()
    };

    let trained = train_text_classifier(&data, lambda, opts)?;
    for warning in &trained.warnings {
        eprintln!("warning: {warning}");
    }
    let model_path = out.join("model.json");
    trained.model.save(&model_path)?;
    println!(
        "trained on {} texts (vocabulary {}, gradient norm {:.2e}); saved {}",
        data.len(),
        trained.model.vocab().len(),
        trained.grad_norm,
        model_path.display()
    );

    if let Some(k) = cv {
        let outcome = crossvalidate(&data, k, seed.unwrap_or(config.seed()), lambda, opts)?;
        for warning in &outcome.warnings {
            eprintln!("warning: {warning}");
        }
        let mut body = String::new();
        body.push_str(&format!(
            "{k}-fold cross-validation over {} texts\n", data.len()
        ));
        body.push_str(&format!(
            "macro P/R/F1: {:.3} / {:.3} / {:.3}\n",
            outcome.report.macro_precision,
            outcome.report.macro_recall,
            outcome.report.macro_f1
        ));
        body.push_str(&format!(
            "micro P/R/F1: {:.3} / {:.3} / {:.3}\naccuracy: {:.3}\n\n",
            outcome.report.micro_precision,
            outcome.report.micro_recall,
            outcome.report.micro_f1,
            outcome.report.accuracy
        ));
        body.push_str(&outcome.report.render_confusion());
        std::fs::write(out.join("cv_report.txt"), &body)?;
        println!(
            "cross-validation macro-F1 {:.3}; report written",
            outcome.report.macro_f1
        );
    }
    Ok(())
}

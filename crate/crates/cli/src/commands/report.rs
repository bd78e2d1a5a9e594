use crate::config::PipelineConfig;
use crate::failure::Failure;

pub fn run(config: &PipelineConfig) -> Result<(), Failure> {
    let out_root = config.output_dir()?.to_path_buf();
    let analyze_dir = out_root.join("analyze");
    if !analyze_dir.is_dir() {
        return Err(Failure::missing("analyze", analyze_dir.display()));
    }

    let mut body = String::new();
    body.push_str("censorship analysis report\n==========================\n\n");
    if let Ok(meta) = std::fs::read_to_string(out_root.join("ingest").join("meta.json")) {
        body.push_str("corpus\n------\n");
        body.push_str(&meta);
        body.push_str("\n\n");
    }
    let mut missing = Vec::new();
    for (title, file) in [
        ("censorship rates", "rates.txt"),
        ("lifetime distributions (minutes)", "lifetimes.txt"),
        ("survival regression", "wald.txt"),
    ] {
        match std::fs::read_to_string(analyze_dir.join(file)) {
            Ok(section) => {
                body.push_str(title);
                body.push('\n');
                body.push_str(&"-".repeat(title.len()));
                body.push('\n');
                body.push_str(&section);
                body.push('\n');
            }
            Err(_) => missing.push(file),
        }
    }
    if !missing.is_empty() {
        return Err(Failure::missing(
            "analyze",
            format!("incomplete outputs ({})", missing.join(", ")),
        ));
    }
    if let Ok(warnings) = std::fs::read_to_string(analyze_dir.join("warnings.txt")) {
        if !warnings.trim().is_empty() {
            body.push_str("warnings\n--------\n");
            body.push_str(&warnings);
            body.push('\n');
        }
    }

    let path = out_root.join("report.txt");
    std::fs::write(&path, body)?;
    println!("report written to {}", path.display());
    Ok(())
}

//! Labeled-dataset file layouts shared by several commands.

use crate::failure::Failure;
use postmortem::{Category, ImageTensor};
use serde::Deserialize;
use std::path::Path;

/// Reads the labeled-image layout: one subdirectory per category slug,
/// image files inside.
pub fn read_labeled_images(root: &Path) -> Result<Vec<(ImageTensor, Category)>, Failure> {
    if !root.is_dir() {
        return Err(Failure::Usage(format!(
            "labeled image dataset {} is not a directory",
            root.display()
        )));
    }
    let mut out = Vec::new();
    let mut dirs: Vec<_> = std::fs::read_dir(root)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|e| e.path().is_dir())
        .collect();
    dirs.sort_by_key(|e| e.file_name());
    for dir in dirs {
        let name = dir.file_name().to_string_lossy().into_owned();
        let category: Category = name
            .parse()
            .map_err(|_| Failure::Usage(format!("directory {name:?} is not a category slug")))?;
        let mut files: Vec<_> = std::fs::read_dir(dir.path())?
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for file in files {
            out.push((ImageTensor::read(&file)?, category));
        }
    }
    Ok(out)
}

/// Writes images into the labeled layout. Used by `synth` to emit
/// training datasets.
pub fn write_labeled_images(
    root: &Path,
    items: &[(ImageTensor, Category)],
) -> Result<(), Failure> {
    std::fs::create_dir_all(root)?;
    let mut counters = std::collections::HashMap::new();
    for (img, category) in items {
        let dir = root.join(category.slug());
        std::fs::create_dir_all(&dir)?;
        let n = counters.entry(*category).or_insert(0usize);
        img.write(&dir.join(format!("{:05}.png", n)))?;
        *n += 1;
    }
    Ok(())
}

#[derive(Deserialize)]
struct TextRow {
    text: String,
    category: Category,
}

/// Reads the labeled-text CSV (columns `text,category`).
pub fn read_labeled_texts(path: &Path) -> Result<Vec<(String, Category)>, Failure> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize::<TextRow>() {
        let row = row?;
        out.push((row.text, row.category));
    }
    Ok(out)
}

pub fn write_labeled_texts(path: &Path, items: &[(String, Category)]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["text", "category"])?;
    for (text, category) in items {
        w.write_record([text.as_str(), category.name()])?;
    }
    w.flush()?;
    Ok(())
}

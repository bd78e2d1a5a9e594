//! Minimal chart rendering for the analysis reports: bar charts for rates,
//! box-and-whisker plots for lifetime distributions, and paired histograms
//! for creation times. Row order follows the companion tables; a legend
//! text file written next to each image names the rows.

use crate::analytics::{CreationHistogram, LifetimeSummary, RateRow};
use crate::error::Result;
use crate::raster::ImageTensor;
use std::path::Path;

const MARGIN: u32 = 20;

fn canvas(w: u32, h: u32) -> ImageTensor {
    ImageTensor::from_fn(w, h, |_, _| [250, 250, 250])
}

fn fill_rect(img: &mut ImageTensor, x0: u32, y0: u32, x1: u32, y1: u32, color: [u8; 3]) {
    for y in y0..=y1.min(img.height() - 1) {
        for x in x0..=x1.min(img.width() - 1) {
            img.set_px(x, y, color);
        }
    }
}

fn series_color(i: usize) -> [u8; 3] {
    const PALETTE: [[u8; 3]; 6] = [
        [204, 61, 61],
        [61, 107, 204],
        [61, 168, 82],
        [214, 146, 46],
        [138, 77, 191],
        [64, 173, 173],
    ];
    PALETTE[i % PALETTE.len()]
}

/// Vertical bars scaled to the maximum value; one bar per row.
pub fn bar_chart(values: &[(String, f64)], path: &Path) -> Result<()> {
    let n = values.len().max(1) as u32;
    let width = (n * 40 + 2 * MARGIN).max(200);
    let height = 300;
    let mut img = canvas(width, height);
    let max = values.iter().map(|(_, v)| *v).fold(0.0f64, f64::max).max(1e-12);
    let plot_h = (height - 2 * MARGIN) as f64;

    for (i, (_, value)) in values.iter().enumerate() {
        let bar_h = ((value / max) * plot_h).round() as u32;
        let x0 = MARGIN + i as u32 * 40 + 6;
        let x1 = x0 + 27;
        let y1 = height - MARGIN;
        let y0 = y1.saturating_sub(bar_h.max(1));
        fill_rect(&mut img, x0, y0, x1, y1, series_color(i));
    }
    // Baseline.
    fill_rect(
        &mut img,
        MARGIN,
        height - MARGIN,
        width - MARGIN,
        height - MARGIN,
        [40, 40, 40],
    );
    img.write(path)?;
    write_legend(path, values.iter().map(|(l, v)| format!("{l}: {v:.4}")))?;
    Ok(())
}

/// One box per category: whiskers min..max, box q1..q3, median line.
pub fn lifetime_boxes(rows: &[LifetimeSummary], path: &Path) -> Result<()> {
    let n = rows.len().max(1) as u32;
    let width = (n * 48 + 2 * MARGIN).max(200);
    let height = 320;
    let mut img = canvas(width, height);
    let max = rows.iter().map(|r| r.max).fold(0.0f64, f64::max).max(1e-12);
    let plot_h = (height - 2 * MARGIN) as f64;
    let y_of = |v: f64| height - MARGIN - ((v / max) * plot_h).round() as u32;

    for (i, row) in rows.iter().enumerate() {
        let cx = MARGIN + i as u32 * 48 + 24;
        let color = series_color(i);
        // Whisker.
        fill_rect(&mut img, cx, y_of(row.max), cx + 1, y_of(row.min), [90, 90, 90]);
        // Box.
        fill_rect(&mut img, cx - 10, y_of(row.q3), cx + 11, y_of(row.q1), color);
        // Median line.
        let m = y_of(row.median);
        fill_rect(&mut img, cx - 12, m, cx + 13, m + 1, [20, 20, 20]);
    }
    img.write(path)?;
    write_legend(
        path,
        rows.iter().map(|r| {
            format!(
                "{}: n={} min={:.1} q1={:.1} median={:.1} q3={:.1} max={:.1}",
                r.category.name(),
                r.count,
                r.min,
                r.q1,
                r.median,
                r.q3,
                r.max
            )
        }),
    )?;
    Ok(())
}

/// Censored (red, upper) and uncensored (blue, lower) creation-time
/// histograms on a shared time axis.
pub fn creation_histogram(hist: &CreationHistogram, path: &Path) -> Result<()> {
    let bins = hist.censored.len().max(1) as u32;
    let width = (bins * 6 + 2 * MARGIN).max(200);
    let height = 320;
    let mut img = canvas(width, height);
    let max = hist
        .censored
        .iter()
        .chain(&hist.uncensored)
        .copied()
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let half = (height / 2 - MARGIN) as f64;
    let mid = height / 2;

    for (i, (&c, &u)) in hist.censored.iter().zip(&hist.uncensored).enumerate() {
        let x0 = MARGIN + i as u32 * 6;
        let x1 = x0 + 4;
        let ch = ((c as f64 / max) * half).round() as u32;
        let uh = ((u as f64 / max) * half).round() as u32;
        if c > 0 {
            fill_rect(&mut img, x0, mid.saturating_sub(ch), x1, mid - 1, [204, 61, 61]);
        }
        if u > 0 {
            fill_rect(&mut img, x0, mid + 1, x1, mid + uh, [61, 107, 204]);
        }
    }
    fill_rect(&mut img, MARGIN, mid, width - MARGIN, mid, [40, 40, 40]);
    img.write(path)?;
    write_legend(
        path,
        [
            format!(
                "{}: bucket={}min censored(top)={} uncensored(bottom)={}",
                hist.category.name(),
                hist.bucket_minutes,
                hist.censored.iter().sum::<usize>(),
                hist.uncensored.iter().sum::<usize>()
            ),
        ],
    )?;
    Ok(())
}

/// Rate bars for the whole table.
pub fn rate_chart(rows: &[RateRow], path: &Path) -> Result<()> {
    let values: Vec<(String, f64)> = rows
        .iter()
        .map(|r| (r.category.name().to_string(), r.rate()))
        .collect();
    bar_chart(&values, path)
}

fn write_legend(
    image_path: &Path,
    lines: impl IntoIterator<Item = String>,
) -> Result<()> {
    let legend_path = image_path.with_extension("legend.txt");
    let body: Vec<String> = lines.into_iter().collect();
    std::fs::write(&legend_path, body.join("\n"))
        .map_err(|e| crate::Error::io(&legend_path, e))?;
    Ok(())
}

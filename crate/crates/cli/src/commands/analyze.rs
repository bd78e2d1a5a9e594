use crate::commands::{classify, ensure_dir, ingest};
use crate::config::{PipelineConfig, SentimentConfig};
use crate::failure::Failure;
use postmortem::analytics::{
    self, build_survival_records, censorship_rate, creation_time_distribution,
};
use postmortem::corpus::{CensorshipStatus, DeletionMatcher};
use postmortem::textclf::{
    ExternalScorer, ExternalScorerConfig, LexiconScorer, SentimentFallback, SentimentProvider,
};
use postmortem::{plots, Category};
use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

pub fn run(
    config: &PipelineConfig,
    bucket_minutes: Option<f64>,
    log1p: bool,
    window_end_flag: Option<String>,
) -> Result<(), Failure> {
    let out_root = config.output_dir()?.to_path_buf();
    let (corpus, _meta) = ingest::load_ingested(&out_root)?;
    let decisions = classify::read_decisions(&out_root)?;
    let out = out_root.join("analyze");
    ensure_dir(&out)?;
    let matcher = DeletionMatcher::default();
    let mut warnings: Vec<String> = Vec::new();

    let window_end = match window_end_flag {
        Some(s) => s
            .parse()
            .map_err(|e| Failure::Usage(format!("bad --window-end: {e}")))?,
        None => config.window_end.unwrap_or(corpus.window_end),
    };

    // Sentiment per post.
    let provider = sentiment_provider(config, &mut warnings)?;
    let mut sentiments: HashMap<String, f64> = HashMap::new();
    {
        let mut w = csv::Writer::from_path(out.join("sentiment.csv"))?;
        w.write_record(["post_id", "score"])?;
        for post in &corpus.posts {
            let score = provider.score(&post.text)?.value();
            sentiments.insert(post.id.clone(), score);
            w.write_record([post.id.clone(), score.to_string()])?;
        }
        w.flush()?;
    }

    // Decision maps for record building.
    let mut image_decisions: HashMap<String, Category> = HashMap::new();
    let mut text_decisions: HashMap<String, Category> = HashMap::new();
    for row in &decisions {
        if let Some(c) = row.image_category {
            image_decisions.insert(row.post_id.clone(), c);
        }
        text_decisions.insert(row.post_id.clone(), row.text_category);
    }

    // Membership and status per topic.
    let mut categorized: BTreeMap<Category, (Vec<String>, Vec<String>)> = BTreeMap::new();
    let mut memberships: BTreeMap<Category, Vec<String>> = BTreeMap::new();
    let mut lifetimes: BTreeMap<Category, Vec<f64>> = BTreeMap::new();
    for row in &decisions {
        let Some(post) = corpus.post(&row.post_id) else { continue };
        let status = matcher.status_of(post);
        for category in &row.membership {
            memberships.entry(*category).or_default().push(post.id.clone());
            let entry = categorized.entry(*category).or_default();
            match status {
                CensorshipStatus::Censored => {
                    entry.0.push(post.id.clone());
                    if let Some(minutes) = post.lifetime_minutes() {
                        lifetimes.entry(*category).or_default().push(minutes);
                    }
                }
                CensorshipStatus::Live => entry.1.push(post.id.clone()),
                CensorshipStatus::VoluntaryOrUnknown => {}
            }
        }
    }

    // Rates.
    let (rate_rows, rate_omitted) = censorship_rate(&categorized);
    {
        let mut w = csv::Writer::from_path(out.join("rates.csv"))?;
        w.write_record(["category", "n_censored", "n_uncensored", "rate"])?;
        for row in &rate_rows {
            w.write_record([
                row.category.name().to_string(),
                row.n_censored.to_string(),
                row.n_uncensored.to_string(),
                format!("{:.6}", row.rate()),
            ])?;
        }
        w.flush()?;
        std::fs::write(out.join("rates.txt"), analytics::report::rate_table(&rate_rows, &[]))?;
        plots::rate_chart(&rate_rows, &out.join("rates.png"))?;
    }
    for category in rate_omitted {
        warnings.push(format!("category {category} has no posts; rate omitted"));
    }

    // Lifetime summaries.
    let (lifetime_rows, lifetime_omitted) = analytics::lifetime_summary(&lifetimes);
    {
        let mut w = csv::Writer::from_path(out.join("lifetimes.csv"))?;
        w.write_record(["category", "count", "min", "q1", "median", "q3", "max"])?;
        for row in &lifetime_rows {
            w.write_record([
                row.category.name().to_string(),
                row.count.to_string(),
                row.min.to_string(),
                row.q1.to_string(),
                row.median.to_string(),
                row.q3.to_string(),
                row.max.to_string(),
            ])?;
        }
        w.flush()?;
        std::fs::write(
            out.join("lifetimes.txt"),
            analytics::report::lifetime_table(&lifetime_rows),
        )?;
        plots::lifetime_boxes(&lifetime_rows, &out.join("lifetimes.png"))?;
    }
    for category in lifetime_omitted {
        warnings.push(format!(
            "category {category} has no censored posts; lifetime summary omitted"
        ));
    }

    // Creation-time distributions.
    let window_minutes = (corpus.window_end - corpus.window_start).num_milliseconds() as f64
        / 60_000.0;
    let bucket = bucket_minutes.unwrap_or_else(|| (window_minutes / 48.0).max(1.0));
    let histograms = creation_time_distribution(&corpus, &memberships, bucket, &matcher)?;
    {
        let mut w = csv::Writer::from_path(out.join("creation_times.csv"))?;
        w.write_record(["category", "bucket_index", "censored", "uncensored"])?;
        for hist in &histograms {
            for (i, (c, u)) in hist.censored.iter().zip(&hist.uncensored).enumerate() {
                w.write_record([
                    hist.category.name().to_string(),
                    i.to_string(),
                    c.to_string(),
                    u.to_string(),
                ])?;
            }
            plots::creation_histogram(
                hist,
                &out.join(format!("creation_{}.png", hist.category.slug())),
            )?;
        }
        w.flush()?;
    }

    // Survival fits per topic.
    let mut fits = BTreeMap::new();
    for category in Category::topics() {
        let build = build_survival_records(
            &corpus,
            category,
            &image_decisions,
            &text_decisions,
            &sentiments,
            window_end,
            &matcher,
        )?;
        warnings.extend(build.warnings.iter().cloned());
        if build.records.is_empty() {
            continue;
        }
        analytics::write_records_csv(
            &out.join(format!("survival_{}.csv", category.slug())),
            &build.records,
        )?;
        if !build.records.iter().any(|r| r.event) {
            warnings.push(format!(
                "category {category}: no observed removals; survival fit skipped"
            ));
            continue;
        }
        match analytics::fit_cox_with(&build.records, Default::default(), log1p) {
            Ok(fit) => {
                if !fit.converged {
                    warnings.push(format!("category {category}: survival fit did not converge"));
                }
                fits.insert(category, fit);
            }
            Err(e) => warnings.push(format!("category {category}: survival fit failed: {e}")),
        }
    }
    std::fs::write(out.join("wald.txt"), analytics::report::wald_table(&fits))?;
    {
        let mut w = csv::Writer::from_path(out.join("wald.csv"))?;
        w.write_record(["category", "covariate", "coef", "se", "z", "p"])?;
        for (category, fit) in &fits {
            for (name, estimate) in fit.covariates.iter().zip(&fit.estimates) {
                match estimate {
                    Some(e) => w.write_record([
                        category.name().to_string(),
                        name.clone(),
                        e.beta.to_string(),
                        e.se.to_string(),
                        e.z.to_string(),
                        e.p.to_string(),
                    ])?,
                    None => w.write_record([
                        category.name().to_string(),
                        name.clone(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ])?,
                }
            }
        }
        w.flush()?;
    }

    std::fs::write(out.join("warnings.txt"), warnings.join("\n"))?;
    println!(
        "analysis complete: {} rate rows, {} lifetime rows, {} survival fits -> {}",
        rate_rows.len(),
        lifetime_rows.len(),
        fits.len(),
        out.display()
    );
    Ok(())
}

fn sentiment_provider(
    config: &PipelineConfig,
    warnings: &mut Vec<String>,
) -> Result<Box<dyn SentimentProvider>, Failure> {
    let lexicon = match (&config.pos_lexicon, &config.neg_lexicon) {
        (Some(pos), Some(neg)) => LexiconScorer::from_files(pos, neg)?,
        _ => {
            warnings.push(
                "no lexicon files configured; lexicon sentiment will be neutral".to_string(),
            );
            LexiconScorer::new::<&str>(&[], &[])
        }
    };
    match &config.sentiment {
        None | Some(SentimentConfig::Lexicon) => Ok(Box::new(lexicon)),
        Some(SentimentConfig::External {
            endpoint,
            path,
            timeout_ms,
            retries,
            fallback_to_lexicon,
            max_concurrency,
        }) => Ok(Box::new(ExternalScorer::new(
            ExternalScorerConfig {
                endpoint: endpoint.clone(),
                path: path.clone(),
                timeout: Duration::from_millis(*timeout_ms),
                retries: *retries,
                fallback: if *fallback_to_lexicon {
                    SentimentFallback::Lexicon
                } else {
                    SentimentFallback::Error
                },
                max_concurrency: *max_concurrency,
            },
            Some(lexicon),
        ))),
    }
}

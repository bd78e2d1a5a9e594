//! Acceptance suite: every criterion runs as one test with its tolerance
//! pinned in code, against an oracle independent of the implementation
//! path it checks. Each test prints one PASS line (visible with
//! `cargo test --test acceptance -- --nocapture`).

use postmortem::analytics::{
    cohens_kappa, fit_cox, rate_mismatches, CoxOptions, CoxProblem, RateRow, SurvivalRecord,
};
use postmortem::augment::{
    apply_transform, augment_dataset, plan_target_expansion, AugmentKind, Augmentation,
};
use postmortem::imgclf::{
    evaluate, normalize_map, raw_cam, train_image_classifier, Architecture, Tensor, TrainConfig,
};
use postmortem::synth::{
    generate_corpus, GeneratorConfig, ImageMode, OracleClassifier, SyntheticCorpus,
};
use postmortem::textclf::{
    stratified_folds, train_text_classifier, TextTrainOptions,
};
use postmortem::{derive_seed, Category, ClassScores, ImageTensor};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use std::collections::HashMap;
use std::time::Instant;

// ---------------------------------------------------------------------
// Cox regression against a brute-force grid oracle.
// ---------------------------------------------------------------------

/// Breslow partial log-likelihood straight from its definition: for each
/// event, the subject's linear predictor minus the log-sum of hazards over
/// everyone still at risk. Shares no code with the fitted implementation.
fn oracle_breslow_loglik(data: &[(f64, bool, f64)], beta: f64) -> f64 {
    let mut ll = 0.0;
    for &(t_i, event, x_i) in data {
        if !event {
            continue;
        }
        let risk: f64 = data
            .iter()
            .filter(|(t_j, _, _)| *t_j >= t_i)
            .map(|(_, _, x_j)| (beta * x_j).exp())
            .sum();
        ll += beta * x_i - risk.ln();
    }
    ll
}

/// Grid argmax plus the likelihood's spread over the grid. A near-zero
/// spread means the covariate is constant within every event risk set, so
/// the coefficient is not identifiable and the draw is useless.
fn oracle_grid_argmax(data: &[(f64, bool, f64)]) -> (f64, f64) {
    let mut best_beta = -5.0;
    let mut best_ll = f64::NEG_INFINITY;
    let mut worst_ll = f64::INFINITY;
    let steps = (10.0_f64 / 1e-3) as i64;
    for k in 0..=steps {
        let beta = -5.0 + k as f64 * 1e-3;
        let ll = oracle_breslow_loglik(data, beta);
        if ll > best_ll {
            best_ll = ll;
            best_beta = beta;
        }
        worst_ll = worst_ll.min(ll);
    }
    (best_beta, best_ll - worst_ll)
}

fn random_tiny_dataset(rng: &mut StdRng) -> Vec<(f64, bool, f64)> {
    let n = rng.random_range(4..=8usize);
    loop {
        let data: Vec<(f64, bool, f64)> = (0..n)
            .map(|_| {
                (
                    rng.random_range(1.0..100.0),
                    rng.random_bool(0.6),
                    if rng.random_bool(0.5) { 1.0 } else { 0.0 },
                )
            })
            .collect();
        let events = data.iter().filter(|d| d.1).count();
        let xs: Vec<f64> = data.iter().map(|d| d.2).collect();
        let distinct_durations = {
            let mut ds: Vec<f64> = data.iter().map(|d| d.0).collect();
            ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ds.windows(2).all(|w| w[0] != w[1])
        };
        if events >= 2 && xs.contains(&0.0) && xs.contains(&1.0) && distinct_durations {
            return data;
        }
    }
}

#[test]
fn criterion_cox_grid_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xC0C5);
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < 20 {
        attempts += 1;
        assert!(attempts < 400, "could not draw enough interior datasets");
        let data = random_tiny_dataset(&mut rng);
        let (grid_beta, spread) = oracle_grid_argmax(&data);
        // Boundary argmax means the optimum is not interior (separation);
        // a flat likelihood means the covariate never varies inside an
        // event risk set. Neither draw tests the optimizer; redraw.
        if grid_beta.abs() > 4.5 || spread < 1e-6 {
            continue;
        }
        let problem = CoxProblem::new(
            data.iter().map(|d| d.0).collect(),
            data.iter().map(|d| d.1).collect(),
            data.iter().map(|d| vec![d.2]).collect(),
            vec!["x".into()],
        )
        .unwrap();
        let fit = problem.fit(CoxOptions::default()).unwrap();
        let Some(est) = &fit.estimates[0] else {
            continue; // flagged non-identifiable; not an interior optimum
        };
        assert!(
            (est.beta - grid_beta).abs() < 2e-3,
            "fit {} vs grid {} on {data:?}",
            est.beta,
            grid_beta
        );
        accepted += 1;
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "PASS: Cox fit matches the 1e-3 grid oracle within 2e-3 on {accepted} datasets ({elapsed:?})"
    );
}

#[test]
fn criterion_cox_gradient_matches_finite_differences() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xFD01);
    for round in 0..100 {
        let n = rng.random_range(5..25usize);
        let p = rng.random_range(1..4usize);
        let durations: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..200.0)).collect();
        let mut events: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        if !events.iter().any(|e| *e) {
            events[0] = true;
        }
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let problem = CoxProblem::new(
            durations,
            events,
            rows,
            (0..p).map(|k| format!("x{k}")).collect(),
        )
        .unwrap();
        let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let grad = problem.gradient(&beta);
        let h = 1e-5;
        for k in 0..p {
            let mut plus = beta.clone();
            let mut minus = beta.clone();
            plus[k] += h;
            minus[k] -= h;
            let fd = (problem.log_likelihood(&plus) - problem.log_likelihood(&minus)) / (2.0 * h);
            let denom = grad[k].abs().max(fd.abs()).max(1e-2);
            let rel = (grad[k] - fd).abs() / denom;
            assert!(
                rel < 1e-6,
                "round {round} coordinate {k}: analytic {} vs fd {fd} (rel {rel:.2e})",
                grad[k]
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "PASS: partial-likelihood gradient matches central differences (rel < 1e-6) on 100 draws ({elapsed:?})"
    );
}

fn recovery_config(n: usize, seed: u64) -> GeneratorConfig {
    let mut config = GeneratorConfig::default_with(n, seed, ImageMode::Skip);
    config.profiles.truncate(1); // one topic keeps every post in one fit
    config.other_fraction = 0.0;
    config.true_beta = [0.0, 0.0, 0.0, 0.0, -0.3];
    config.baseline_hazard = 1.0 / 400.0;
    config
}

#[test]
fn criterion_planted_coefficient_recovery() {
    let started = Instant::now();
    let category = Category::BoXilai; // first profile in the default set

    // Primary run: the estimate lands in the stated interval with p < 0.05.
    let corpus = generate_corpus(&recovery_config(5000, 0xBEE)).unwrap();
    let records = corpus.oracle_records(category);
    assert!(records.len() > 4000, "membership too small: {}", records.len());
    let fit = fit_cox(&records, CoxOptions::default()).unwrap();
    let est = fit.estimate("sentiment").expect("sentiment identifiable");
    assert!(
        (-0.4..=-0.2).contains(&est.beta),
        "recovered sentiment coefficient {} outside [-0.4, -0.2]",
        est.beta
    );
    assert!(est.p < 0.05, "p = {}", est.p);

    // Reseeded runs: the sign is negative in at least 95% of 20.
    let mut negative = 0;
    for round in 0..20u64 {
        let corpus = generate_corpus(&recovery_config(5000, derive_seed(0xBEE, round))).unwrap();
        let records = corpus.oracle_records(category);
        let fit = fit_cox(&records, CoxOptions::default()).unwrap();
        if fit.estimate("sentiment").expect("identifiable").beta < 0.0 {
            negative += 1;
        }
    }
    assert!(negative >= 19, "negative sign in only {negative}/20 runs");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "PASS: planted sentiment -0.3 recovered ({:.3}, p {:.2e}); sign negative in {negative}/20 reseeded runs ({elapsed:?})",
        est.beta, est.p
    );
}

#[test]
fn criterion_cox_invariances() {
    let mut rng = StdRng::seed_from_u64(0x1DEA);
    let n = 60;
    let p = 3;
    let durations: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..500.0)).collect();
    let events: Vec<bool> = (0..n).map(|i| i % 3 != 0).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.random_range(-1.5..1.5)).collect())
        .collect();
    let names: Vec<String> = (0..p).map(|k| format!("x{k}")).collect();

    let base = CoxProblem::new(durations.clone(), events.clone(), rows.clone(), names.clone())
        .unwrap()
        .fit(CoxOptions::default())
        .unwrap();
    let base_beta: Vec<f64> = base.estimates.iter().map(|e| e.unwrap().beta).collect();

    // Rescale covariate 1 by a: its coefficient scales by 1/a, the rest
    // and the maximized log partial likelihood stay put.
    let a = 2.5;
    let scaled_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r[1] *= a;
            r
        })
        .collect();
    let scaled = CoxProblem::new(durations.clone(), events.clone(), scaled_rows, names.clone())
        .unwrap()
        .fit(CoxOptions::default())
        .unwrap();
    for k in 0..p {
        let expect = if k == 1 { base_beta[k] / a } else { base_beta[k] };
        let got = scaled.estimates[k].unwrap().beta;
        let rel = (got - expect).abs() / expect.abs().max(1e-12);
        assert!(rel < 1e-6, "rescale covariate {k}: {got} vs {expect} (rel {rel:.2e})");
    }
    assert!(
        (scaled.log_likelihood - base.log_likelihood).abs() < 1e-8,
        "rescale changed the maximized likelihood: {} vs {}",
        scaled.log_likelihood,
        base.log_likelihood
    );

    // Shift covariate 2 by a constant: nothing changes.
    let shifted_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r[2] += 7.0;
            r
        })
        .collect();
    let shifted = CoxProblem::new(durations, events, shifted_rows, names)
        .unwrap()
        .fit(CoxOptions::default())
        .unwrap();
    for k in 0..p {
        let got = shifted.estimates[k].unwrap().beta;
        assert!(
            (got - base_beta[k]).abs() < 1e-8,
            "shift moved coefficient {k}: {got} vs {}",
            base_beta[k]
        );
    }
    assert!((shifted.log_likelihood - base.log_likelihood).abs() < 1e-8);

    // Concavity: the observed information at the optimum is positive
    // semi-definite (Cholesky succeeds within tolerance).
    let problem = CoxProblem::new(
        (0..n).map(|i| 1.0 + i as f64).collect(),
        (0..n).map(|i| i % 3 != 0).collect(),
        rows,
        (0..p).map(|k| format!("x{k}")).collect(),
    )
    .unwrap();
    let refit = problem.fit(CoxOptions::default()).unwrap();
    let beta_hat: Vec<f64> = refit.estimates.iter().map(|e| e.unwrap().beta).collect();
    let info = problem.information(&beta_hat);
    assert!(
        postmortem::linalg::cholesky(&info, p, 1e-9).is_some(),
        "information matrix is not PSD at the optimum"
    );
    println!("PASS: Cox rescale (1/a within 1e-6) and shift (1e-8) invariances hold; information PSD at the optimum");
}

// ---------------------------------------------------------------------
// Activation maps against a triple-loop oracle.
// ---------------------------------------------------------------------

/// Independent re-derivation: explicit loops over (k, y, x) with its own
/// min-max normalization.
fn oracle_cam(features: &Tensor, weights: &[f64]) -> Vec<f64> {
    let mut map = vec![0.0; features.h * features.w];
    for y in 0..features.h {
        for x in 0..features.w {
            let mut acc = 0.0;
            for (k, w) in weights.iter().enumerate() {
                acc += w * features.at(k, y, x);
            }
            map[y * features.w + x] = acc;
        }
    }
    let min = map.iter().copied().fold(f64::INFINITY, f64::min);
    let max = map.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= min {
        return vec![0.0; map.len()];
    }
    map.iter().map(|v| (v - min) / (max - min)).collect()
}

#[test]
fn criterion_cam_matches_brute_force() {
    let mut rng = StdRng::seed_from_u64(0xCA3);
    for round in 0..25 {
        let k = rng.random_range(1..=8usize);
        let h = rng.random_range(1..=5usize);
        let w = rng.random_range(1..=5usize);
        let features = Tensor::from_data(
            k,
            h,
            w,
            (0..k * h * w).map(|_| rng.random_range(-2.0..2.0)).collect(),
        );
        let weights: Vec<f64> = (0..k).map(|_| rng.random_range(-1.5..1.5)).collect();

        let ours = normalize_map(&raw_cam(&features, &weights));
        let oracle = oracle_cam(&features, &weights);
        for (a, b) in ours.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "round {round}: {a} vs {b}");
        }

        // One-hot head weights read out the selected feature map exactly.
        let pick = rng.random_range(0..k);
        let mut one_hot = vec![0.0; k];
        one_hot[pick] = 1.0;
        let selected: Vec<f64> =
            (0..h * w).map(|i| features.data[pick * h * w + i]).collect();
        assert_eq!(raw_cam(&features, &one_hot), selected);
        assert_eq!(
            normalize_map(&raw_cam(&features, &one_hot)),
            normalize_map(&selected)
        );
    }
    println!("PASS: activation maps equal the triple-loop oracle (1e-6) over 25 random models");
}

// ---------------------------------------------------------------------
// Kappa oracles.
// ---------------------------------------------------------------------

#[test]
fn criterion_kappa_oracles() {
    // Perfect agreement.
    let labels: Vec<Category> = (0..40).map(|i| Category::ALL[i % 6]).collect();
    let perfect = cohens_kappa(&labels, &labels).unwrap();
    assert_eq!(perfect.kappa, Some(1.0));

    // Hand-computed 2x2 table [[20, 5], [10, 15]]: kappa = 0.4 exactly.
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut push = |x, y, count: usize| {
        for _ in 0..count {
            a.push(x);
            b.push(y);
        }
    };
    push(Category::Fire, Category::Fire, 20);
    push(Category::Fire, Category::Protest, 5);
    push(Category::Protest, Category::Fire, 10);
    push(Category::Protest, Category::Protest, 15);
    let table = cohens_kappa(&a, &b).unwrap();
    assert!((table.kappa.unwrap() - 0.4).abs() < 1e-12);
    assert!((table.observed - 0.7).abs() < 1e-12);
    assert!((table.expected - 0.5).abs() < 1e-12);

    // Relabeling both raters is invisible to kappa: 50 random permutations.
    let mut rng = StdRng::seed_from_u64(0xAAB);
    let rater_a: Vec<Category> = (0..300)
        .map(|_| Category::ALL[rng.random_range(0..15)])
        .collect();
    let rater_b: Vec<Category> = rater_a
        .iter()
        .map(|c| {
            if rng.random_bool(0.35) {
                Category::ALL[rng.random_range(0..15)]
            } else {
                *c
            }
        })
        .collect();
    let baseline = cohens_kappa(&rater_a, &rater_b).unwrap().kappa.unwrap();
    for _ in 0..50 {
        let mut mapping: Vec<usize> = (0..15).collect();
        for i in (1..15).rev() {
            let j = rng.random_range(0..=i);
            mapping.swap(i, j);
        }
        let relabel =
            |c: Category| Category::from_index(mapping[c.index()]).expect("permutation");
        let pa: Vec<Category> = rater_a.iter().map(|c| relabel(*c)).collect();
        let pb: Vec<Category> = rater_b.iter().map(|c| relabel(*c)).collect();
        let permuted = cohens_kappa(&pa, &pb).unwrap().kappa.unwrap();
        assert!(
            (permuted - baseline).abs() < 1e-12,
            "{permuted} vs {baseline}"
        );
    }
    println!("PASS: kappa oracles (perfect = 1, table = 0.4 exactly, 50 relabelings invariant)");
}

// ---------------------------------------------------------------------
// Confidence gate.
// ---------------------------------------------------------------------

#[test]
fn criterion_threshold_gate() {
    let mut rng = StdRng::seed_from_u64(0x6A7E);
    let grid: Vec<f64> = vec![0.05, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 1.0];
    for _ in 0..1000 {
        let logits: Vec<f64> = (0..15).map(|_| rng.random_range(-4.0..4.0)).collect();
        let scores = ClassScores::from_logits(&logits);
        let max = scores.probs().iter().cloned().fold(f64::MIN, f64::max);

        // Other iff the maximum falls short of 0.80.
        let decision = scores.decide(0.80);
        if max >= 0.80 {
            assert_ne!(decision, Category::Other, "max {max}");
        } else {
            assert_eq!(decision, Category::Other, "max {max}");
        }

        // Raising the threshold never turns Other back into a topic.
        let mut seen_other = false;
        for &t in &grid {
            let d = scores.decide(t);
            if seen_other {
                assert_eq!(d, Category::Other, "monotonicity broke at {t}");
            }
            seen_other = seen_other || d == Category::Other;
        }
    }
    println!("PASS: gate decides Other iff max < 0.80 and is monotone over the threshold grid (1000 draws)");
}

// ---------------------------------------------------------------------
// Rate arithmetic against a published reference table.
// ---------------------------------------------------------------------

#[test]
fn criterion_rate_arithmetic_and_reference_mismatches() {
    // Reference rows whose printed percentages resolve from their counts,
    // and two that are known not to (kept as a regression fixture).
    let rows = vec![
        RateRow { category: Category::Protest, n_censored: 536, n_uncensored: 220 },
        RateRow { category: Category::PrurientNudity, n_censored: 2664, n_uncensored: 2551 },
        RateRow { category: Category::XiJinping, n_censored: 1745, n_uncensored: 1029 },
        RateRow { category: Category::BoXilai, n_censored: 665, n_uncensored: 336 },
        RateRow { category: Category::InjuryDead, n_censored: 1799, n_uncensored: 1029 },
    ];
    let printed = vec![
        (Category::Protest, 71.0),
        (Category::PrurientNudity, 51.0),
        (Category::XiJinping, 63.0),
        (Category::BoXilai, 64.0),
        (Category::InjuryDead, 51.0),
    ];

    // Self-consistent rows compute to the stated percentages.
    let expect = [
        (Category::Protest, 70.9),
        (Category::PrurientNudity, 51.1),
        (Category::XiJinping, 62.9),
    ];
    for (category, pct) in expect {
        let row = rows.iter().find(|r| r.category == category).unwrap();
        assert!(
            (row.rate_percent() - pct).abs() < 0.05,
            "{category}: computed {:.2}",
            row.rate_percent()
        );
        let printed_pct = printed.iter().find(|(c, _)| *c == category).unwrap().1;
        assert!((row.rate_percent() - printed_pct).abs() <= 0.5);
    }
    // rate * total reproduces the censored count (up to one rounding of
    // the correctly-rounded division).
    for row in &rows {
        let reconstructed = row.rate() * row.total() as f64;
        assert_eq!(reconstructed.round() as usize, row.n_censored);
        assert!((reconstructed - row.n_censored as f64).abs() < 1e-9 * row.n_censored as f64);
    }

    // The two inconsistent rows MUST mismatch the formula and get flagged.
    let flagged = rate_mismatches(&rows, &printed, 0.5);
    assert_eq!(flagged, vec![Category::BoXilai, Category::InjuryDead]);
    println!("PASS: rate formula matches consistent reference rows within 0.5pp; the two inconsistent rows are flagged");
}

// ---------------------------------------------------------------------
// Augmentation determinism and size laws.
// ---------------------------------------------------------------------

fn synthetic_images(count: usize, side: u32, seed: u64) -> Vec<(ImageTensor, Category)> {
    (0..count)
        .map(|i| {
            let mut rng = StdRng::seed_from_u64(derive_seed(seed, i as u64));
            let img = ImageTensor::from_fn(side, side, |_, _| {
                [rng.random(), rng.random(), rng.random()]
            });
            (img, Category::ALL[i % 15])
        })
        .collect()
}

fn apply_plan_digest(
    items: &[(ImageTensor, Category)],
    plan: &[Vec<Augmentation>],
) -> (usize, u64) {
    // FNV-1a over all output pixels; order-sensitive, so bit-identity of
    // the digest means bit-identity of every image.
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut digest = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    let mut count = 0usize;
    for ((img, _), specs) in items.iter().zip(plan) {
        digest(img.data());
        count += 1;
        for spec in specs {
            let out = apply_transform(img, spec).unwrap();
            digest(out.data());
            count += 1;
        }
    }
    (count, hash)
}

#[test]
fn criterion_augmentation_determinism_and_size_law() {
    let started = Instant::now();

    // 10 items x all six transforms -> exactly 70 outputs.
    let small = synthetic_images(10, 24, 5);
    let mut rng = StdRng::seed_from_u64(9);
    let specs: Vec<Augmentation> = AugmentKind::ALL
        .iter()
        .map(|k| Augmentation::sample(*k, &mut rng))
        .collect();
    let out = augment_dataset(&small, &specs).unwrap();
    assert_eq!(out.len(), 70);

    // Fixed seed reruns are bit-identical (checked over full pixel data).
    let items = synthetic_images(300, 64, 11);
    let plan_a = plan_target_expansion(items.len(), 1100, 77).unwrap();
    let plan_b = plan_target_expansion(items.len(), 1100, 77).unwrap();
    assert_eq!(plan_a, plan_b);
    let (count_a, digest_a) = apply_plan_digest(&items, &plan_a);
    let (count_b, digest_b) = apply_plan_digest(&items, &plan_b);
    assert_eq!(count_a, 1100);
    assert_eq!((count_a, digest_a), (count_b, digest_b));
    let plan_c = plan_target_expansion(items.len(), 1100, 78).unwrap();
    assert_ne!(apply_plan_digest(&items, &plan_c).1, digest_a);

    // Target mode: 5,038 originals at 64x64 expand to 18,966 within +-6
    // (the plan is exact; applying it is the expensive part).
    let full = synthetic_images(5038, 64, 13);
    let plan = plan_target_expansion(full.len(), 18_966, 21).unwrap();
    let planned: usize = plan.iter().map(|s| 1 + s.len()).sum();
    assert!(
        (planned as i64 - 18_966i64).abs() <= 6,
        "planned {planned} outputs"
    );
    let (applied, _) = apply_plan_digest(&full, &plan);
    assert_eq!(applied, planned);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "PASS: augmentation bit-identical under fixed seeds; 10x6 -> 70; 5038 -> {applied} (target 18966) ({elapsed:?})"
    );
}

// ---------------------------------------------------------------------
// End-to-end synthetic pipeline.
// ---------------------------------------------------------------------

#[test]
fn criterion_end_to_end_synthetic_pipeline() {
    let started = Instant::now();

    // Five planted topics plus Other, with images.
    let mut config = GeneratorConfig::default_with(2500, 0xE2E, ImageMode::Render { side: 32 });
    config.profiles.truncate(5);
    config.true_beta = [0.0, 0.0, 0.0, 0.0, -0.3];
    config.baseline_hazard = 1.0 / 400.0;
    config.other_fraction = 1.0 / 6.0;
    let corpus = generate_corpus(&config).unwrap();

    // Train both classifiers on labeled sets drawn from the same planted
    // vocabulary and motifs.
    let train_images = SyntheticCorpus::labeled_images(&config, 40, 0x71);
    let image_outcome = train_image_classifier(
        &train_images,
        &TrainConfig {
            arch: Architecture {
                input_side: 32,
                channels: [8, 16, 24],
            },
            val_fraction: 0.1,
            seed: 3,
            epochs: 40,
            batch_size: 32,
            learning_rate: 3e-3,
            threshold: 0.80,
            early_stop_f1: Some(0.995),
            early_stop_loss: 0.05,
        },
    )
    .unwrap();
    let image_model = image_outcome.model;

    let train_texts = SyntheticCorpus::labeled_texts(&config, 40, 0x72);
    let text_model = train_text_classifier(
        &train_texts,
        1e-4,
        TextTrainOptions {
            min_count: 1,
            ..Default::default()
        },
    )
    .unwrap()
    .model;

    // Held-out synthetic data: fresh draws from the same generators.
    let held_images = SyntheticCorpus::labeled_images(&config, 12, 0x81);
    let image_report = evaluate(&image_model, &held_images, 0.80).unwrap();
    assert!(
        image_report.present_macro_f1() >= 0.9,
        "image macro-F1 {:.3}",
        image_report.present_macro_f1()
    );
    let held_texts = SyntheticCorpus::labeled_texts(&config, 12, 0x82);
    let text_pairs: Vec<(Category, Category)> = held_texts
        .iter()
        .map(|(text, truth)| (*truth, text_model.predict_text(text).argmax()))
        .collect();
    let text_report = postmortem::metrics::EvalReport::from_pairs(&text_pairs);
    assert!(
        text_report.present_macro_f1() >= 0.9,
        "text macro-F1 {:.3}",
        text_report.present_macro_f1()
    );

    // Classify the corpus with the trained models.
    let images: HashMap<&str, &ImageTensor> = corpus
        .images
        .iter()
        .map(|(id, img)| (id.as_str(), img))
        .collect();
    let mut image_decisions: HashMap<String, Category> = HashMap::new();
    let mut text_decisions: HashMap<String, Category> = HashMap::new();
    for post in &corpus.posts {
        if let Some(image_id) = post.image_refs.first() {
            let img = images[image_id.as_str()];
            image_decisions.insert(post.id.clone(), image_model.predict(img).decide(0.80));
        }
        text_decisions.insert(post.id.clone(), text_model.predict_text(&post.text).argmax());
    }

    // Analytics with classifier covariates vs oracle covariates on the
    // most-populated topic: the recovered sentiment effect barely moves.
    let oracle = OracleClassifier::from_truth(&corpus.truth);
    let in_corpus = corpus.to_corpus();
    let matcher = postmortem::corpus::DeletionMatcher::default();
    let category = {
        let mut counts: HashMap<Category, usize> = HashMap::new();
        for row in &corpus.truth {
            if row.category != Category::Other {
                *counts.entry(row.category).or_insert(0) += 1;
            }
        }
        counts.into_iter().max_by_key(|(_, n)| *n).unwrap().0
    };
    let classifier_records = postmortem::analytics::build_survival_records(
        &in_corpus,
        category,
        &image_decisions,
        &text_decisions,
        oracle.sentiments(),
        corpus.window_end,
        &matcher,
    )
    .unwrap()
    .records;
    let oracle_records: Vec<SurvivalRecord> = corpus.oracle_records(category);
    assert!(oracle_records.len() > 250, "only {} records", oracle_records.len());

    let beta_classifier = fit_cox(&classifier_records, CoxOptions::default())
        .unwrap()
        .estimate("sentiment")
        .expect("identifiable")
        .beta;
    let beta_oracle = fit_cox(&oracle_records, CoxOptions::default())
        .unwrap()
        .estimate("sentiment")
        .expect("identifiable")
        .beta;
    let delta = (beta_classifier - beta_oracle).abs();
    assert!(
        delta < 0.05,
        "classifier {beta_classifier:.4} vs oracle {beta_oracle:.4} (delta {delta:.4})"
    );
    assert!(beta_oracle < 0.0 && beta_classifier < 0.0);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 600.0, "took {elapsed:?}");
    println!(
        "PASS: end-to-end pipeline image F1 {:.3}, text F1 {:.3}, |delta beta_sentiment| {delta:.4} ({elapsed:?})",
        image_report.present_macro_f1(),
        text_report.present_macro_f1()
    );
}

// ---------------------------------------------------------------------
// Text-classifier regularization path and fold cover.
// ---------------------------------------------------------------------

#[test]
fn criterion_text_regularization_and_fold_cover() {
    let config = GeneratorConfig::default_with(1, 1, ImageMode::Skip);
    let data = SyntheticCorpus::labeled_texts(&config, 14, 0x90);

    let opts = TextTrainOptions {
        min_count: 1,
        ..Default::default()
    };
    let mut previous = f64::INFINITY;
    let mut norms = Vec::new();
    for lambda in [1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
        let norm = train_text_classifier(&data, lambda, opts)
            .unwrap()
            .model
            .weight_l2_norm();
        assert!(
            norm <= previous + 1e-9,
            "weight norm grew along the lambda grid: {norm} after {previous}"
        );
        norms.push(norm);
        previous = norm;
    }

    // 10-fold assignment is a disjoint cover.
    let labels: Vec<Category> = data.iter().map(|(_, c)| *c).collect();
    let folds = stratified_folds(&labels, 10, 0x91);
    assert_eq!(folds.len(), labels.len());
    let mut per_fold = [0usize; 10];
    for &f in &folds {
        assert!(f < 10);
        per_fold[f] += 1;
    }
    assert_eq!(per_fold.iter().sum::<usize>(), labels.len());
    assert!(per_fold.iter().all(|n| *n > 0));
    println!(
        "PASS: weight norm non-increasing over the lambda grid {norms:?}; 10 folds cover all {} items",
        labels.len()
    );
}

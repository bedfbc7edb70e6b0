//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p emopred-core --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use emopred::archive;
use emopred::classifiers::{mnb_fit, BinaryProblem, Classifier, Distribution, MnbConfig};
use emopred::corpus::RawCorpus;
use emopred::ensemble::{vote_proba, Language};
use emopred::features::{vectorize_corpus, FeatureConfig, LabeledDataset, SparseCountVector};
use emopred::metrics::{confusion, evaluate, ConfusionMatrix};
use emopred::pipeline::{train, Selector, TrainConfig};
use emopred::preprocess::{extract_ngrams, AsciiPolicy, TokenSequence};
use emopred::resample::{nearest_neighbors, smote_traced, ResamplePlan, SmoteConfig};
use emopred::synthetic::{accented_corpus, skewed_corpus, SkewedCorpusSpec};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn smote_plan_arithmetic() -> Outcome {
    let es = ResamplePlan::uniform_target(19, 19_675).total();
    let en = ResamplePlan::uniform_target(20, 106_509).total();
    ensure!(es == 373_825, "Spanish-shaped plan gave {es}");
    ensure!(en == 2_130_180, "English-shaped plan gave {en}");
    Ok(format!("es={es} en={en}"))
}

fn mnb_oracle() -> Outcome {
    let docs = common::all_small_documents(3, 3);
    ensure!(docs.len() == 20, "expected 20 documents, got {}", docs.len());
    let to_row = |d: &Vec<u32>| SparseCountVector::from_dense(&d.iter().map(|&c| c as f64).collect::<Vec<_>>()).unwrap();
    let mut max_err: f64 = 0.0;
    let mut checked = 0;
    for alpha in [0.5, 1.0] {
        for d0 in &docs {
            for d1 in &docs {
                let train_set = vec![(d0.clone(), 0), (d1.clone(), 1)];
                let data = LabeledDataset::new(vec![to_row(d0), to_row(d1)], vec![0, 1], 2, 3).unwrap();
                let model = mnb_fit(&data, &MnbConfig { alpha }).map_err(|e| e.to_string())?;
                for x in &docs {
                    let want = common::bayes_posterior(&train_set, 2, alpha, x);
                    let got = model.predict_proba(&to_row(x)).map_err(|e| e.to_string())?;
                    for (g, w) in got.probs().iter().zip(&want) {
                        max_err = max_err.max((g - w).abs());
                    }
                    if (want[0] - want[1]).abs() > 1e-9 {
                        let oracle_class = usize::from(want[1] > want[0]);
                        ensure!(got.argmax() == oracle_class, "prediction differs on {x:?}");
                    }
                    checked += 1;
                }
            }
        }
    }
    ensure!(max_err < 1e-9, "max posterior error {max_err:e}");
    Ok(format!("{checked} posteriors, max abs error {max_err:.1e}"))
}

fn lr_gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rows: Vec<SparseCountVector> = (0..20)
        .map(|_| {
            let dense: Vec<f64> = (0..10)
                .map(|_| if rng.random_bool(0.4) { rng.random_range(0..4) as f64 } else { 0.0 })
                .collect();
            SparseCountVector::from_dense(&dense).unwrap()
        })
        .collect();
    let labels = (0..20).map(|_| rng.random_range(0..3)).collect();
    let data = LabeledDataset::new(rows, labels, 3, 10).unwrap();
    let mut worst: f64 = 0.0;
    for point in 0..10 {
        let problem = BinaryProblem::new(&data, point % 3, 0.3);
        let params: Vec<f64> = (0..11).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (g, gb) = problem.gradient(&params[..10], params[10]);
        let analytic: Vec<f64> = g.into_iter().chain(std::iter::once(gb)).collect();
        let numeric = common::finite_difference(|p| problem.objective(&p[..10], p[10]), &params, 1e-5);
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|n| n * n).sum::<f64>().sqrt());
        let rel = diff / scale.max(1e-12);
        worst = worst.max(rel);
    }
    ensure!(worst < 1e-4, "worst relative gradient error {worst:e}");
    Ok(format!("10 points, worst relative error {worst:.1e}"))
}

fn random_distribution(rng: &mut ChaCha8Rng, k: usize) -> Distribution {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
    let s: f64 = raw.iter().sum();
    Distribution::new(raw.iter().map(|x| x / s).collect()).unwrap()
}

fn voting_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let k = rng.random_range(2..=6);
        let m = rng.random_range(1..=4);
        let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..10.0)).collect();
        let members: Vec<Distribution> = (0..m).map(|_| random_distribution(&mut rng, k)).collect();
        let combined = vote_proba(&weights, &members).map_err(|e| e.to_string())?;

        ensure!((combined.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9, "case {case}: not normalized");
        for j in 0..k {
            let lo = members.iter().map(|d| d.probs()[j]).fold(f64::INFINITY, f64::min);
            let hi = members.iter().map(|d| d.probs()[j]).fold(f64::NEG_INFINITY, f64::max);
            let p = combined.probs()[j];
            ensure!(lo <= p && p <= hi, "case {case}: class {j} value {p} outside [{lo}, {hi}]");
        }

        let alpha = rng.random_range(0.01..100.0);
        let scaled: Vec<f64> = weights.iter().map(|w| w * alpha).collect();
        let rescaled = vote_proba(&scaled, &members).map_err(|e| e.to_string())?;
        ensure!(rescaled.argmax() == combined.argmax(), "case {case}: argmax changed under scaling by {alpha}");

        let same = random_distribution(&mut rng, k);
        let unanimous = vote_proba(&weights, &vec![same.clone(); m]).map_err(|e| e.to_string())?;
        ensure!(unanimous == same, "case {case}: unanimity violated");

        let winner = rng.random_range(0..k);
        let dominated: Vec<Distribution> = (0..m)
            .map(|_| {
                let mut raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
                raw[winner] = raw.iter().copied().fold(0.0, f64::max) + rng.random_range(0.01..1.0);
                let s: f64 = raw.iter().sum();
                Distribution::new(raw.iter().map(|x| x / s).collect()).unwrap()
            })
            .collect();
        let dom = vote_proba(&weights, &dominated).map_err(|e| e.to_string())?;
        ensure!(dom.argmax() == winner, "case {case}: dominance violated");

        // Exact ties resolve to the smallest tied index, every time.
        let tied_at = rng.random_range(0..k - 1);
        let mut raw = vec![1.0; k];
        raw[tied_at] = 3.0;
        raw[k - 1] = 3.0;
        let s: f64 = raw.iter().sum();
        let tie = Distribution::new(raw.iter().map(|x| x / s).collect()).unwrap();
        for _ in 0..3 {
            let t = vote_proba(&weights, &vec![tie.clone(); m]).map_err(|e| e.to_string())?;
            ensure!(t.argmax() == tied_at, "case {case}: tie resolved to {}", t.argmax());
        }
    }
    Ok("1000 random cases".into())
}

fn metrics_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let k = rng.random_range(1..=10);
        let mut rows: Vec<Vec<u64>> = (0..k)
            .map(|_| (0..k).map(|_| if rng.random_bool(0.3) { 0 } else { rng.random_range(0..15) }).collect())
            .collect();
        if rows.iter().flatten().all(|&c| c == 0) {
            rows[0][0] = 1;
        }
        let report = evaluate(&ConfusionMatrix::from_rows(&rows).unwrap()).map_err(|e| e.to_string())?;
        let (per, macros) = common::direct_metrics(&rows);
        for (c, (p, r, f)) in per.iter().enumerate() {
            let got = &report.per_class[c];
            for (a, b) in [(got.precision, *p), (got.recall, *r), (got.f1, *f)] {
                worst = worst.max((a - b).abs());
            }
        }
        let got = [report.macro_precision, report.macro_recall, report.macro_f1, report.accuracy];
        for (a, b) in got.iter().zip(&macros) {
            worst = worst.max((a - b).abs());
        }
        let mean_f1 = report.per_class.iter().map(|m| m.f1).sum::<f64>() / k as f64;
        ensure!((report.macro_f1 - mean_f1).abs() <= 1e-12, "case {case}: macro-F1 is not the mean");
    }
    ensure!(worst <= 1e-12, "worst deviation {worst:e}");

    let hand = evaluate(&ConfusionMatrix::from_rows(&[vec![2, 1], vec![0, 3]]).unwrap()).unwrap();
    ensure!((hand.macro_f1 - 0.8286).abs() < 1e-4, "hand macro-F1 {}", hand.macro_f1);
    ensure!((hand.accuracy - 5.0 / 6.0).abs() < 1e-12, "hand accuracy {}", hand.accuracy);
    Ok(format!("1000 matrices, worst deviation {worst:.1e}; hand macro-F1 {:.4}", hand.macro_f1))
}

fn smote_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..40 {
        let k = rng.random_range(2..=4);
        let dim = rng.random_range(2..=8);
        let sizes: Vec<usize> = (0..k).map(|_| rng.random_range(1..=50)).collect();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, &n) in sizes.iter().enumerate() {
            for _ in 0..n {
                let dense: Vec<f64> = (0..dim)
                    .map(|_| if rng.random_bool(0.5) { rng.random_range(0..5) as f64 } else { 0.0 })
                    .collect();
                rows.push(SparseCountVector::from_dense(&dense).unwrap());
                labels.push(c);
            }
        }
        // Interleave classes so class members are not contiguous.
        let mut order: Vec<usize> = (0..rows.len()).collect();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let rows: Vec<SparseCountVector> = order.iter().map(|&i| rows[i].clone()).collect();
        let labels: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
        let data = LabeledDataset::new(rows, labels, k, dim).unwrap();

        let cfg = SmoteConfig { k_neighbors: rng.random_range(1..=6), seed: case };
        let (out, origins) = smote_traced(&data, &cfg).map_err(|e| e.to_string())?;
        let n_max = *sizes.iter().max().unwrap();
        ensure!(out.class_counts() == vec![n_max; k], "case {case}: unbalanced {:?}", out.class_counts());
        ensure!(out.rows()[..data.len()] == *data.rows(), "case {case}: originals not preserved");
        ensure!(out.labels()[..data.len()] == *data.labels(), "case {case}: original labels changed");
        ensure!(origins.len() == out.len() - data.len(), "case {case}: origin count");
        for (i, o) in origins.iter().enumerate() {
            let s = out.rows()[data.len() + i].to_dense();
            let x = data.rows()[o.parent].to_dense();
            let nn = data.rows()[o.neighbor].to_dense();
            ensure!(data.labels()[o.parent] == out.labels()[data.len() + i], "case {case}: parent class");
            ensure!(data.labels()[o.neighbor] == out.labels()[data.len() + i], "case {case}: neighbor class");
            for f in 0..dim {
                ensure!(s[f] >= 0.0, "case {case}: negative entry");
                ensure!(
                    x[f].min(nn[f]) <= s[f] && s[f] <= x[f].max(nn[f]),
                    "case {case}: synthetic row {i} feature {f} outside its segment"
                );
            }
        }
        let again = smote_traced(&data, &cfg).map_err(|e| e.to_string())?;
        ensure!(again.0 == out, "case {case}: not deterministic");

        for c in 0..k {
            let members: Vec<&SparseCountVector> = data
                .rows()
                .iter()
                .zip(data.labels())
                .filter(|&(_, &l)| l == c)
                .map(|(r, _)| r)
                .collect();
            let kk = cfg.k_neighbors.min(members.len().saturating_sub(1));
            let dense: Vec<Vec<f64>> = members.iter().map(|r| r.to_dense()).collect();
            ensure!(
                nearest_neighbors(&members, kk) == common::brute_force_knn(&dense, kk),
                "case {case}: k-NN disagrees with brute force for class {c}"
            );
        }
    }
    Ok("40 random skewed datasets".into())
}

fn recall(report: &emopred::EvalReport, class: usize) -> f64 {
    report.per_class[class].recall
}

fn oversampling_direction() -> Outcome {
    let train_spec = SkewedCorpusSpec { seed: 42, ..Default::default() };
    let test_spec = SkewedCorpusSpec { seed: 4242, ..Default::default() };
    let train_corpus = skewed_corpus(&train_spec).map_err(|e| e.to_string())?;
    let test_corpus = skewed_corpus(&test_spec).map_err(|e| e.to_string())?;
    let cfg = TrainConfig::for_language(Language::English).with_seed(42);
    let model = train(&train_corpus, &cfg).map_err(|e| e.to_string())?;
    let eval = |sel: Selector| -> Result<emopred::EvalReport, String> {
        let pred = model.predict_texts(test_corpus.texts(), sel).map_err(|e| e.to_string())?;
        evaluate(&confusion(test_corpus.labels(), &pred, 5).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
    };
    let e1 = eval(Selector::Ensemble1)?;
    let e2 = eval(Selector::Ensemble2)?;
    let rare1 = (recall(&e1, 3) + recall(&e1, 4)) / 2.0;
    let rare2 = (recall(&e2, 3) + recall(&e2, 4)) / 2.0;
    let detail = format!(
        "rare recall E1 {:.3} / E2 {:.3}; accuracy E1 {:.3} / E2 {:.3}",
        rare1, rare2, e1.accuracy, e2.accuracy
    );
    ensure!(rare2 > rare1, "Ensemble2 does not raise rare-class recall: {detail}");
    ensure!(e1.accuracy > e2.accuracy, "Ensemble1 is not more accurate: {detail}");
    Ok(detail)
}

fn non_ascii_direction() -> Outcome {
    let train_corpus = accented_corpus(3, 600, 8).map_err(|e| e.to_string())?;
    let test_corpus = accented_corpus(3, 600, 9).map_err(|e| e.to_string())?;
    let macro_f1 = |policy: AsciiPolicy| -> Result<f64, String> {
        let cfg = TrainConfig {
            ascii_policy: policy,
            ..TrainConfig::for_language(Language::Spanish).with_seed(8)
        };
        let model = train(&train_corpus, &cfg).map_err(|e| e.to_string())?;
        let pred = model.predict_texts(test_corpus.texts(), Selector::Meta).map_err(|e| e.to_string())?;
        let m = confusion(test_corpus.labels(), &pred, 3).map_err(|e| e.to_string())?;
        Ok(evaluate(&m).map_err(|e| e.to_string())?.macro_f1)
    };
    let keep = macro_f1(AsciiPolicy::KeepMost)?;
    let strip = macro_f1(AsciiPolicy::StripAll)?;
    let detail = format!("macro-F1 keep-most {keep:.3} vs strip-all {strip:.3}");
    ensure!(keep > strip, "{detail}");
    Ok(detail)
}

fn determinism_and_round_trip() -> Outcome {
    let spec = SkewedCorpusSpec { num_tweets: 600, seed: 3, ..Default::default() };
    let corpus = skewed_corpus(&spec).map_err(|e| e.to_string())?;
    let held_out = skewed_corpus(&SkewedCorpusSpec { num_tweets: 200, seed: 4, ..spec.clone() }).map_err(|e| e.to_string())?;
    let cfg = TrainConfig::for_language(Language::English).with_seed(99);
    let a = train(&corpus, &cfg).map_err(|e| e.to_string())?;
    let b = train(&corpus, &cfg).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("model.emopred");
    archive::save(&a, &path).map_err(|e| e.to_string())?;
    let reloaded = archive::load(&path).map_err(|e| e.to_string())?;
    for sel in Selector::ALL {
        let pa = a.predict_proba_texts(held_out.texts(), sel).map_err(|e| e.to_string())?;
        let pb = b.predict_proba_texts(held_out.texts(), sel).map_err(|e| e.to_string())?;
        let pr = reloaded.predict_proba_texts(held_out.texts(), sel).map_err(|e| e.to_string())?;
        ensure!(pa == pb, "selector {sel}: two identical runs disagree");
        ensure!(pa == pr, "selector {sel}: reloaded archive disagrees");
    }
    Ok(format!("{} held-out tweets x 6 selectors", held_out.len()))
}

fn feature_pipeline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let alphabet = ["ab", "cd", "ef", "gh", "ij", "kl", "mn"];
    for case in 0..100 {
        let token_lists: Vec<Vec<String>> = (0..50)
            .map(|_| {
                (0..rng.random_range(0..8))
                    .map(|_| alphabet[rng.random_range(0..alphabet.len())].to_string())
                    .collect()
            })
            .collect();
        let texts: Vec<String> = token_lists.iter().map(|t| t.join(" ")).collect();
        let corpus = RawCorpus::new(texts, vec![0; 50], 2).unwrap();
        let min_df = rng.random_range(1..=8);
        let cfg = FeatureConfig { min_df, ..Default::default() };
        let (vocab, data) = vectorize_corpus(&corpus, AsciiPolicy::KeepMost, &cfg).map_err(|e| e.to_string())?;
        let df = common::brute_force_df(&token_lists);
        let expected: Vec<&String> = df.iter().filter(|&(_, &n)| n >= min_df).map(|(f, _)| f).collect();
        let got: Vec<&String> = vocab.features().iter().collect();
        ensure!(got == expected, "case {case}: vocabulary differs from brute-force df cutoff");
        for (f, &n) in &df {
            ensure!((vocab.get(f).is_some()) == (n >= min_df), "case {case}: {f:?} df={n}");
        }
        for (tokens, row) in token_lists.iter().zip(data.rows()) {
            let grams = tokens.len() + tokens.len().saturating_sub(1);
            let in_vocab = (0..tokens.len())
                .map(|i| tokens[i].clone())
                .chain(tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])))
                .filter(|g| vocab.get(g).is_some())
                .count();
            ensure!(row.sum() == in_vocab as f64, "case {case}: row sum");
            ensure!(grams == in_vocab || min_df > 1, "case {case}: min_df=1 lost grams");
        }
    }
    for n in 1..200 {
        let t = TokenSequence((0..n).map(|i| format!("t{}", i % 7)).collect());
        let bag = extract_ngrams(&t);
        ensure!(bag.len() == 2 * n - 1, "n={n}: {} grams", bag.len());
    }
    Ok("100 random 50-tweet corpora; 2n-1 identity for n < 200".into())
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "smote-plan-arithmetic", budget: Duration::from_millis(1), run: smote_plan_arithmetic },
        Criterion { name: "mnb-oracle", budget: Duration::from_secs(10), run: mnb_oracle },
        Criterion { name: "lr-gradient-check", budget: Duration::from_secs(5), run: lr_gradient_check },
        Criterion { name: "soft-voting-properties", budget: Duration::from_secs(5), run: voting_suite },
        Criterion { name: "metrics-oracle", budget: Duration::from_secs(5), run: metrics_oracle },
        Criterion { name: "smote-properties", budget: Duration::from_secs(10), run: smote_properties },
        Criterion { name: "oversampling-direction", budget: Duration::from_secs(120), run: oversampling_direction },
        Criterion { name: "non-ascii-direction", budget: Duration::from_secs(60), run: non_ascii_direction },
        Criterion { name: "determinism-and-archive", budget: Duration::from_secs(60), run: determinism_and_round_trip },
        Criterion { name: "feature-pipeline", budget: Duration::from_secs(5), run: feature_pipeline },
    ];

    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => Err(format!("{detail}; over budget {:?}", c.budget)),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {:<26} {:>10.3?}  {detail}", c.name, elapsed),
            Err(why) => {
                failures += 1;
                println!("FAIL  {:<26} {:>10.3?}  {why}", c.name, elapsed);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

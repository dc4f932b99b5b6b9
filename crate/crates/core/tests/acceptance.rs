//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.
//! Checks against the released dataset run only when `STANCEBENCH_DATASET`
//! points at the corpus file and are reported as SKIP otherwise.

mod common;

use std::collections::HashSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{capture_logs, check_golden, fixture, oracle, Reply, StubServer};
use stancebench::annotation::{agreement_report, fleiss_kappa, rows_from_comments, AnnotationRow};
use stancebench::corpus::{
    label_distribution, load_labeled, split_dataset, RecordFormat, SplitRatios, Subset,
};
use stancebench::llm::{
    CompletionModel, EndpointConfig, ErrorClass, HttpClient, LlmError, RetryPolicy, Secret,
};
use stancebench::metrics::{
    accuracy, class_metrics, confusion_matrix, f1_score, macro_f1_of_macros,
    macro_f1_per_class_avg, macro_precision, macro_recall, MetricsReport,
};
use stancebench::parse::parse_label;
use stancebench::prompt::{build_plan, render_phase, Exemplar, Strategy};
use stancebench::runner::{read_records, run_evaluation, EndpointSection, RunConfig, RunRecord};
use stancebench::vectorize::{
    BaselineModel, SoftmaxObjective, SparseVector, TrainConfig, VectorizerKind,
};
use stancebench::{LabeledComment, RawComment, StanceLabel};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(name: &str, actual: f64, expected: f64, tol: f64) -> Result<(), String> {
    ensure((actual - expected).abs() <= tol, || {
        format!("{name}: {actual:.6} vs {expected} (tolerance {tol})")
    })
}

fn random_label(rng: &mut ChaCha8Rng) -> StanceLabel {
    StanceLabel::ALL[(rng.next_u32() % 3) as usize]
}

fn metric_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240501);
    for instance in 0..1000 {
        let n = 1 + (rng.next_u32() % 50) as usize;
        let pairs: Vec<_> = (0..n)
            .map(|_| {
                let gold = random_label(&mut rng);
                let predicted = (rng.next_u32() % 10 != 0).then(|| random_label(&mut rng));
                (gold, predicted)
            })
            .collect();
        let m = confusion_matrix(&pairs).map_err(|e| e.to_string())?;
        let o = oracle(&pairs);
        let tol = 1e-12;
        let ctx = |what: &str| format!("instance {instance}: {what}");
        close(&ctx("accuracy"), accuracy(&m), o.accuracy, tol)?;
        for (k, c) in StanceLabel::ALL.into_iter().enumerate() {
            let cm = class_metrics(&m, c);
            close(&ctx("precision"), cm.precision, o.precision[k], tol)?;
            close(&ctx("recall"), cm.recall, o.recall[k], tol)?;
            close(&ctx("f1"), cm.f1, o.f1[k], tol)?;
        }
        close(
            &ctx("macro precision"),
            macro_precision(&m),
            o.macro_precision,
            tol,
        )?;
        close(&ctx("macro recall"), macro_recall(&m), o.macro_recall, tol)?;
        close(
            &ctx("macro F1 of macros"),
            macro_f1_of_macros(&m),
            o.macro_f1_of_macros,
            tol,
        )?;
        close(
            &ctx("mean class F1"),
            macro_f1_per_class_avg(&m),
            o.macro_f1_mean,
            tol,
        )?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("1000 instances in {elapsed:.2?}"))
}

fn class_rows(rows: [(f64, f64, f64); 3]) -> Outcome {
    for (p, r, f) in rows {
        close(&format!("F1({p}, {r})"), f1_score(p, r), f, 1e-4)?;
    }
    Ok(rows
        .iter()
        .map(|(p, r, _)| format!("{:.4}", f1_score(*p, *r)))
        .collect::<Vec<_>>()
        .join(", "))
}

fn zero_shot_class_rows() -> Outcome {
    class_rows([
        (0.4934, 0.5068, 0.5000),
        (0.7975, 0.7621, 0.7794),
        (0.6928, 0.7260, 0.7090),
    ])
}

fn fine_tuned_class_rows() -> Outcome {
    class_rows([
        (0.5637, 0.6769, 0.6151),
        (0.8460, 0.7847, 0.8142),
        (0.7879, 0.7312, 0.7585),
    ])
}

fn macro_f1_reconciliation() -> Outcome {
    let class_f1: Vec<f64> = [(0.4934, 0.5068), (0.7975, 0.7621), (0.6928, 0.7260)]
        .iter()
        .map(|(p, r)| f1_score(*p, *r))
        .collect();
    let mean = class_f1.iter().sum::<f64>() / 3.0;
    close("mean of class F1", mean, 0.6628, 5e-4)?;
    let of_macros = f1_score(0.6612, 0.6650);
    close("F1 of macro P/R", of_macros, 0.6631, 5e-4)?;

    // both definitions appear side by side in the rendered summary table
    let pairs = [
        (StanceLabel::Neutral, Some(StanceLabel::Neutral)),
        (StanceLabel::ProIsrael, Some(StanceLabel::Neutral)),
        (StanceLabel::ProPalestine, Some(StanceLabel::ProPalestine)),
    ];
    let report = MetricsReport::from_matrix(&confusion_matrix(&pairs).unwrap());
    let table = report.summary_table("m");
    ensure(
        table.contains("Test F1 Score (macro)")
            && table.contains("Test F1 Score (macro, mean of class F1)")
            && table.contains(&format!("{:.4}", report.macro_f1_of_macros))
            && table.contains(&format!("{:.4}", report.macro_f1_per_class_avg)),
        || "summary table does not print both macro-F1 values".into(),
    )?;
    Ok(format!(
        "mean of class F1 = {mean:.4}, F1 of macro P/R = {of_macros:.4}"
    ))
}

fn synthetic_corpus(n: usize) -> Vec<LabeledComment> {
    let t = chrono::DateTime::from_timestamp(1_700_000_000, 0).unwrap();
    (0..n)
        .map(|i| {
            let raw = RawComment {
                id: format!("s{i}"),
                created_utc: t,
                text: format!("synthetic comment {i}"),
            };
            let gold = match i % 41 {
                0..=9 => StanceLabel::Neutral,
                10..=30 => StanceLabel::ProIsrael,
                _ => StanceLabel::ProPalestine,
            };
            LabeledComment::new(raw, Some(gold), vec![]).unwrap()
        })
        .collect()
}

fn split_reproduction() -> Outcome {
    let corpus = synthetic_corpus(9969);
    let mut slowest = Duration::ZERO;
    for seed in [0, 1, 7, 42, 2024, u64::MAX] {
        let start = Instant::now();
        let split =
            split_dataset(&corpus, SplitRatios::default(), seed).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        let (train, test, validation) = split.sizes();
        ensure((train, test, validation) == (6978, 1496, 1495), || {
            format!("seed {seed}: train={train} test={test} validation={validation}")
        })?;
    }
    ensure(slowest < Duration::from_secs(1), || {
        format!("slowest split took {slowest:?}")
    })?;
    Ok(format!(
        "train=6978 test=1496 validation=1495 for 6 seeds, slowest {slowest:.2?}"
    ))
}

/// Fleiss' kappa evaluated directly from its defining sums.
fn kappa_by_formula(rows: &[[usize; 3]]) -> f64 {
    let n = 3.0;
    let items = rows.len() as f64;
    let p_i: Vec<f64> = rows
        .iter()
        .map(|r| (r.iter().map(|&c| (c * c) as f64).sum::<f64>() - n) / (n * (n - 1.0)))
        .collect();
    let p_bar = p_i.iter().sum::<f64>() / items;
    let p_j: Vec<f64> = (0..3)
        .map(|j| rows.iter().map(|r| r[j] as f64).sum::<f64>() / (items * n))
        .collect();
    let p_e: f64 = p_j.iter().map(|p| p * p).sum();
    (p_bar - p_e) / (1.0 - p_e)
}

fn fleiss_kappa_checks() -> Outcome {
    let unanimous =
        load_labeled(&fixture("unanimous.csv"), RecordFormat::Csv).map_err(|e| e.to_string())?;
    let rows = rows_from_comments(&unanimous).map_err(|e| e.to_string())?;
    let k = fleiss_kappa(&rows).map_err(|e| e.to_string())?;
    ensure(k == 1.0, || format!("unanimity fixture gave {k}"))?;

    use StanceLabel::*;
    let hand = [
        [Neutral, Neutral, Neutral],
        [Neutral, Neutral, ProIsrael],
        [ProPalestine, ProPalestine, ProIsrael],
        [ProIsrael, ProIsrael, ProPalestine],
    ];
    let rows: Vec<AnnotationRow> = hand
        .iter()
        .enumerate()
        .map(|(i, labels)| AnnotationRow {
            comment_id: format!("h{i}"),
            labels: *labels,
        })
        .collect();
    let counts: Vec<[usize; 3]> = hand
        .iter()
        .map(|labels| {
            let mut c = [0; 3];
            for l in labels {
                c[l.index()] += 1;
            }
            c
        })
        .collect();
    let expected = kappa_by_formula(&counts);
    let k = fleiss_kappa(&rows).map_err(|e| e.to_string())?;
    close("4-row fixture", k, expected, 1e-9)?;

    let released = match released_dataset()? {
        None => "released-data check SKIP (STANCEBENCH_DATASET not set)".to_string(),
        Some(comments) => {
            let annotated: Vec<_> = comments
                .into_iter()
                .filter(|c| !c.annotator_labels.is_empty())
                .collect();
            let report =
                agreement_report(&rows_from_comments(&annotated).map_err(|e| e.to_string())?)
                    .map_err(|e| e.to_string())?;
            close("released kappa", report.kappa, 0.93, 0.005)?;
            format!("released kappa {:.4}", report.kappa)
        }
    };
    Ok(format!(
        "unanimous = 1.0, 4-row = {k:.9} (formula {expected:.9}), {released}"
    ))
}

fn released_dataset() -> Result<Option<Vec<LabeledComment>>, String> {
    let Some(path) = std::env::var_os("STANCEBENCH_DATASET") else {
        return Ok(None);
    };
    let path = Path::new(&path);
    let format = RecordFormat::from_path(path).ok_or("cannot infer dataset format")?;
    load_labeled(path, format)
        .map(Some)
        .map_err(|e| e.to_string())
}

fn dataset_checksum() -> Result<Option<String>, String> {
    let Some(comments) = released_dataset()? else {
        return Ok(None);
    };
    let counts = label_distribution(&comments);
    let got = (
        counts.neutral,
        counts.pro_israel,
        counts.pro_palestine,
        comments.len(),
    );
    ensure(got == (2431, 4947, 2591, 9969), || {
        format!("neutral/pro-israel/pro-palestine/total = {got:?}")
    })?;
    Ok(Some(
        "Neutral 2431, Pro-Israel 4947, Pro-Palestine 2591, total 9969".into(),
    ))
}

struct CatalogRun {
    strategy: Strategy,
    records: Vec<RunRecord>,
    eval: Vec<LabeledComment>,
}

fn run_catalog(root: &Path) -> Result<Vec<CatalogRun>, String> {
    let mut runs = Vec::new();
    for strategy in Strategy::CATALOG {
        let dir = root.join(strategy.name());
        let config = RunConfig::new(
            fixture("comments12.jsonl"),
            strategy,
            EndpointSection::mock(),
            &dir,
        );
        run_evaluation(&config).map_err(|e| format!("{strategy}: {e}"))?;
        let records = read_records(&dir.join("records.jsonl"))
            .map_err(|e| e.to_string())?
            .records;
        let split = stancebench::runner::prepare_split(&config).map_err(|e| e.to_string())?;
        let eval = split.subset(Subset::Test).into_iter().cloned().collect();
        runs.push(CatalogRun {
            strategy,
            records,
            eval,
        });
    }
    Ok(runs)
}

const REPORT_FILES: [&str; 4] = ["records.jsonl", "report.json", "report.md", "confusion.csv"];

fn cli_mock_run(out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_stancebench"))
        .arg("run")
        .arg("--corpus")
        .arg(fixture("comments12.jsonl"))
        .args(["--endpoint", "mock", "--subset", "all", "--mock-rules"])
        .arg(fixture("mock_rules.toml"))
        .arg("--output")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        format!(
            "stancebench run failed: {}",
            String::from_utf8_lossy(&status.stderr)
        )
    })
}

fn end_to_end_determinism(tmp: &Path) -> Result<(String, Vec<CatalogRun>), String> {
    let start = Instant::now();
    let (a, b) = (tmp.join("a"), tmp.join("b"));
    cli_mock_run(&a)?;
    cli_mock_run(&b)?;
    for file in REPORT_FILES {
        let fa = std::fs::read(a.join(file)).map_err(|e| format!("{file}: {e}"))?;
        let fb = std::fs::read(b.join(file)).map_err(|e| format!("{file}: {e}"))?;
        ensure(fa == fb, || {
            format!("{file} differs between identical runs")
        })?;
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("report.json")).unwrap()).unwrap();
    let acc = report["metrics"]["accuracy"].as_f64().unwrap_or(f64::NAN);
    ensure(acc == 0.75, || {
        format!("fixture accuracy {acc}, expected 0.75")
    })?;

    let catalog = run_catalog(&tmp.join("catalog"))?;
    for run in &catalog {
        ensure(!run.records.is_empty(), || {
            format!("{}: no records", run.strategy)
        })?;
        for r in &run.records {
            let phases = run.strategy.phase_count();
            ensure(
                r.phase_prompts.len() == phases && r.phase_responses.len() == phases,
                || {
                    format!(
                        "{}: {} has {} phases",
                        run.strategy,
                        r.comment_id,
                        r.phase_prompts.len()
                    )
                },
            )?;
            if run.strategy == Strategy::ScoringReflectiveReread {
                ensure(r.scores.is_some(), || {
                    format!("{}: no scores", r.comment_id)
                })?;
            }
            let replayed = parse_label(r.phase_responses.last().unwrap())
                .ok()
                .map(|p| p.label);
            ensure(replayed == r.predicted, || {
                format!("{}: prediction not replayable", r.comment_id)
            })?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok((
        format!(
            "2 CLI runs byte-identical (accuracy 0.75), {} strategies completed, {elapsed:.2?}",
            catalog.len()
        ),
        catalog,
    ))
}

fn golden_comment() -> LabeledComment {
    let raw = RawComment {
        id: "g1".into(),
        created_utc: chrono::DateTime::from_timestamp(1_714_000_000, 0).unwrap(),
        text: "Both governments keep promising a deal, and nothing changes for the people living there."
            .into(),
    };
    LabeledComment::new(raw, Some(StanceLabel::Neutral), vec![]).unwrap()
}

fn golden_exemplars() -> Vec<Exemplar> {
    [
        (
            "x1",
            "Solidarity with everyone marching for Gaza this weekend.",
            StanceLabel::ProPalestine,
        ),
        (
            "x2",
            "Israel has the right to bring its hostages home.",
            StanceLabel::ProIsrael,
        ),
        (
            "x3",
            "Can someone explain what the Oslo Accords actually said?",
            StanceLabel::Neutral,
        ),
        (
            "x4",
            "The blockade has to be lifted now.",
            StanceLabel::ProPalestine,
        ),
        (
            "x5",
            "Hamas could end this today by surrendering.",
            StanceLabel::ProIsrael,
        ),
    ]
    .into_iter()
    .map(|(id, text, label)| Exemplar {
        id: id.into(),
        text: text.into(),
        label,
    })
    .collect()
}

fn prompt_goldens_and_leakage(catalog: &[CatalogRun], fixture_report: &Path) -> Outcome {
    let comment = golden_comment();
    let exemplars = golden_exemplars();
    let mut files = 0;
    for strategy in Strategy::CATALOG {
        let plan = build_plan(strategy, &comment, &exemplars).map_err(|e| e.to_string())?;
        let base = strategy.name().replace('-', "_");
        for (i, phase) in plan.phases.iter().enumerate() {
            let prior = match strategy {
                Strategy::MetaSelfCritique => "Pro-Israel",
                _ => "Pro-Israel: 2\nPro-Palestine: 1\nNeutral: 5",
            };
            let text = render_phase(phase, phase.consumes_prior().then_some(prior))
                .map_err(|e| e.to_string())?;
            let name = if plan.phases.len() == 1 {
                format!("{base}.txt")
            } else {
                format!("{base}_{}.txt", i + 1)
            };
            check_golden(&name, &text)?;
            files += 1;
        }
    }
    let report_md = std::fs::read_to_string(fixture_report).map_err(|e| e.to_string())?;
    check_golden("fixture_report.md", &report_md)?;
    files += 1;

    let mut audited = 0;
    for run in catalog {
        let eval_ids: HashSet<&str> = run.eval.iter().map(|c| c.id.as_str()).collect();
        for r in &run.records {
            for id in &r.exemplar_ids {
                ensure(!eval_ids.contains(id.as_str()), || {
                    format!("{}: exemplar {id} is a test comment", run.strategy)
                })?;
            }
            for prompt in &r.phase_prompts {
                for c in &run.eval {
                    let occurrences = prompt.matches(c.truncated_text.as_str()).count();
                    let allowed = usize::from(c.id == r.comment_id);
                    ensure(occurrences == allowed, || {
                        format!(
                            "{}: test text of {} found in the prompt for {}",
                            run.strategy, c.id, r.comment_id
                        )
                    })?;
                }
            }
            audited += 1;
        }
    }
    Ok(format!(
        "{files} golden files match, {audited} records audited with no leakage"
    ))
}

fn baseline_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut unit = || (rng.next_u32() as f64 / u32::MAX as f64) * 2.0 - 1.0;
    let v = 6;
    let examples: Vec<(SparseVector, StanceLabel)> = (0..12)
        .map(|i| {
            let entries = (0..v)
                .filter(|j| (i + j) % 3 != 0)
                .map(|j| (j, 1.0 + (i * j % 5) as f64 * 0.3))
                .collect();
            (SparseVector::new(v, entries), StanceLabel::ALL[i % 3])
        })
        .collect();
    let weights: Vec<f64> = (0..3 * v).map(|_| unit()).collect();
    let bias = [unit(), unit(), unit()];
    let objective = SoftmaxObjective::new(&examples, v, 0.01);
    let (gw, gb) = objective.gradient(&weights, &bias);
    let h = 1e-6;
    let mut analytic = gw.clone();
    analytic.extend(gb);
    let mut numeric = Vec::with_capacity(analytic.len());
    for k in 0..3 * v {
        let (mut up, mut down) = (weights.clone(), weights.clone());
        up[k] += h;
        down[k] -= h;
        numeric.push((objective.loss(&up, &bias) - objective.loss(&down, &bias)) / (2.0 * h));
    }
    for c in 0..3 {
        let (mut up, mut down) = (bias, bias);
        up[c] += h;
        down[c] -= h;
        numeric.push((objective.loss(&weights, &up) - objective.loss(&weights, &down)) / (2.0 * h));
    }
    let diff: f64 = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a + n).powi(2))
        .sum::<f64>()
        .sqrt();
    let rel = diff / scale;
    ensure(rel <= 1e-5, || format!("gradient relative error {rel:e}"))?;

    let words = [
        ["alpha", "apple", "amber"],
        ["bravo", "berry", "basil"],
        ["charlie", "cherry", "cedar"],
    ];
    let toy: Vec<(String, StanceLabel)> = (0..30)
        .map(|i| {
            let class = i % 3;
            let w = words[class];
            (
                format!("{} {} {}", w[i % 3], w[(i + 1) % 3], "common filler"),
                StanceLabel::ALL[class],
            )
        })
        .collect();
    let model = BaselineModel::train(&toy, VectorizerKind::Tfidf, 1, &TrainConfig::default())
        .map_err(|e| e.to_string())?;
    let correct = toy
        .iter()
        .filter(|(t, l)| model.predict(t).ok() == Some(*l))
        .count();
    ensure(correct == toy.len(), || {
        format!("training accuracy {correct}/{}", toy.len())
    })?;
    Ok(format!(
        "gradient relative error {rel:.2e}, separable training accuracy 1.0"
    ))
}

fn endpoint(url: &str, attempts: u32) -> EndpointConfig {
    let mut cfg = EndpointConfig::new("stub-model", url);
    cfg.timeout_ms = 300;
    cfg.retry = RetryPolicy {
        max_attempts: attempts,
        base_backoff_ms: 10,
        backoff_multiplier: 2.0,
        max_backoff_ms: 25,
        ..RetryPolicy::default()
    };
    cfg
}

fn network_robustness() -> Outcome {
    let logs = capture_logs();
    let token = "hf_SECRET_token_0123456789";

    let ok = StubServer::start(vec![Reply::ok(r#"[{"generated_text":"Pro-Israel"}]"#)]);
    let client = HttpClient::with_token(endpoint(&ok.url, 3), Some(Secret::new(token)))
        .map_err(|e| e.to_string())?;
    let r = client
        .complete("classify this")
        .map_err(|e| e.to_string())?;
    ensure(r.text == "Pro-Israel" && r.attempts == 1, || {
        format!("first-try result {r:?}")
    })?;

    let flaky = StubServer::start(vec![
        Reply::status(503, "{}"),
        Reply::status(500, "{}"),
        Reply::ok(r#"[{"generated_text":"Neutral"}]"#),
    ]);
    let client = HttpClient::with_token(endpoint(&flaky.url, 3), Some(Secret::new(token)))
        .map_err(|e| e.to_string())?;
    let r = client
        .complete("classify this")
        .map_err(|e| e.to_string())?;
    ensure(r.attempts == 3 && r.text == "Neutral", || {
        format!("retry result {r:?}")
    })?;
    ensure(flaky.requests().len() == 3, || {
        format!("{} requests", flaky.requests().len())
    })?;
    ensure(r.backoff.windows(2).all(|w| w[0] <= w[1]), || {
        format!("delays {:?}", r.backoff)
    })?;
    ensure(
        r.backoff == [Duration::from_millis(10), Duration::from_millis(20)],
        || format!("delays {:?}", r.backoff),
    )?;

    let limited = StubServer::start(vec![Reply::status(429, "{}")]);
    let client =
        HttpClient::with_token(endpoint(&limited.url, 4), None).map_err(|e| e.to_string())?;
    let err = client.complete("x").unwrap_err();
    ensure(
        matches!(err, LlmError::RateLimited { attempts: 4, .. }),
        || format!("429 gave {err:?}"),
    )?;
    let capped = RetryPolicy {
        max_attempts: 4,
        base_backoff_ms: 10,
        max_backoff_ms: 25,
        ..RetryPolicy::default()
    };
    let delays: Vec<_> = (1..4).map(|k| capped.delay(k)).collect();
    ensure(
        delays.windows(2).all(|w| w[0] <= w[1])
            && delays.iter().all(|d| *d <= capped.max_backoff()),
        || format!("policy delays {delays:?}"),
    )?;

    let slow = StubServer::start(vec![Reply::ok("[]").delayed(Duration::from_millis(1500))]);
    let client = HttpClient::with_token(endpoint(&slow.url, 2), None).map_err(|e| e.to_string())?;
    let err = client.complete("x").unwrap_err();
    ensure(matches!(err, LlmError::Timeout { attempts: 2, .. }), || {
        format!("slow server gave {err:?}")
    })?;
    ensure(err.class() != Some(ErrorClass::RateLimited), || {
        "timeout classed as rate limit".into()
    })?;

    let denied = StubServer::start(vec![Reply::status(401, "{}")]);
    let client = HttpClient::with_token(endpoint(&denied.url, 5), Some(Secret::new(token)))
        .map_err(|e| e.to_string())?;
    let err = client.complete("x").unwrap_err();
    ensure(matches!(err, LlmError::Auth { status: 401, .. }), || {
        format!("401 gave {err:?}")
    })?;
    ensure(denied.requests().len() == 1, || {
        "auth failure was retried".into()
    })?;

    let mut small = endpoint(&ok.url, 3);
    small.max_prompt_chars = 10;
    let before = ok.requests().len();
    let client =
        HttpClient::with_token(small, Some(Secret::new(token))).map_err(|e| e.to_string())?;
    let err = client.complete("this prompt is too long").unwrap_err();
    ensure(
        matches!(err, LlmError::Oversize { .. }) && ok.requests().len() == before,
        || format!("oversize gave {err:?}"),
    )?;

    let mut sent = ok.requests();
    sent.extend(flaky.requests());
    sent.extend(denied.requests());
    ensure(
        sent.iter()
            .all(|r| r.head.contains(&format!("Bearer {token}")) && !r.body.contains(token)),
        || "token missing from the auth header or present in a body".into(),
    )?;
    let lines = logs.lines();
    ensure(!lines.is_empty(), || "no log lines captured".into())?;
    ensure(
        lines
            .iter()
            .all(|l| !l.contains(token) && !l.contains("SECRET")),
        || {
            format!(
                "auth token appeared in a log line: {:?}",
                lines
                    .iter()
                    .find(|l| l.contains(token) || l.contains("SECRET"))
            )
        },
    )?;
    Ok(format!(
        "attempt counts and delays match policy, rate-limit/timeout distinct, {} log lines token-free",
        lines.len()
    ))
}

#[test]
fn acceptance_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let mut failures = Vec::new();
    let mut report = |name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("PASS  {name}: {detail}"),
        Err(why) => {
            println!("FAIL  {name}: {why}");
            failures.push(name.to_string());
        }
    };

    report("metric-oracle equivalence", metric_oracle_equivalence());
    report(
        "class-wise consistency (zero-shot table)",
        zero_shot_class_rows(),
    );
    report(
        "class-wise consistency (fine-tuned table)",
        fine_tuned_class_rows(),
    );
    report("macro-F1 reconciliation", macro_f1_reconciliation());
    report("split reproduction", split_reproduction());
    report("Fleiss' kappa", fleiss_kappa_checks());
    match dataset_checksum() {
        Ok(None) => println!("SKIP  dataset checksum: STANCEBENCH_DATASET not set"),
        Ok(Some(detail)) => report("dataset checksum", Ok(detail)),
        Err(why) => report("dataset checksum", Err(why)),
    }
    let catalog = match end_to_end_determinism(tmp.path()) {
        Ok((detail, catalog)) => {
            report("end-to-end determinism", Ok(detail));
            catalog
        }
        Err(why) => {
            report("end-to-end determinism", Err(why));
            Vec::new()
        }
    };
    report(
        "prompt golden files and leakage audit",
        prompt_goldens_and_leakage(&catalog, &tmp.path().join("a").join("report.md")),
    );
    report("baseline sanity", baseline_sanity());
    report("network robustness", network_robustness());

    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}

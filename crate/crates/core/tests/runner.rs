mod common;

use std::fs;
use std::io::Write;
use std::path::Path;

use common::{fixture, Reply, StubServer};
use stancebench::corpus::Subset;
use stancebench::llm::{EndpointConfig, LlmError, RetryPolicy};
use stancebench::metrics::{confusion_matrix, MetricsReport};
use stancebench::parse::parse_label;
use stancebench::prompt::Strategy;
use stancebench::runner::{
    read_records, report_from_records, rerender_report, run_evaluation, EndpointSection, RunConfig,
    RunError, REPORT_JSON, REPORT_MD,
};
use stancebench::StanceLabel;

fn mock_config(strategy: Strategy, out: &Path) -> RunConfig {
    let mut config = RunConfig::new(
        fixture("comments12.jsonl"),
        strategy,
        EndpointSection::mock(),
        out,
    );
    config.corpus.subset = Subset::All;
    if strategy.required_exemplars() > 0 {
        config.corpus.subset = Subset::Test;
    }
    config
}

#[test]
fn resume_after_truncation_matches_uninterrupted_run() {
    let tmp = tempfile::tempdir().unwrap();
    let full = tmp.path().join("full");
    let cut = tmp.path().join("cut");
    run_evaluation(&mock_config(Strategy::ZeroShot, &full)).unwrap();
    run_evaluation(&mock_config(Strategy::ZeroShot, &cut)).unwrap();

    // keep the header and five records, then leave a torn half-line
    let records = cut.join("records.jsonl");
    let text = fs::read_to_string(&records).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let mut kept = lines[..6].join("\n");
    kept.push('\n');
    kept.push_str(&lines[6][..lines[6].len() / 2]);
    fs::write(&records, kept).unwrap();
    fs::remove_file(cut.join(REPORT_JSON)).unwrap();

    run_evaluation(&mock_config(Strategy::ZeroShot, &cut)).unwrap();
    for file in ["records.jsonl", REPORT_JSON, REPORT_MD, "confusion.csv"] {
        assert_eq!(
            fs::read(full.join(file)).unwrap(),
            fs::read(cut.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn resume_refuses_a_changed_config() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = mock_config(Strategy::ZeroShot, tmp.path());
    run_evaluation(&config).unwrap();
    config.corpus.split_seed = 9;
    assert!(matches!(
        run_evaluation(&config),
        Err(RunError::ResumeMismatch(_))
    ));
    config.fresh = true;
    run_evaluation(&config).unwrap();
}

#[test]
fn empty_subset_fails_before_writing_anything() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("one.jsonl");
    // three comments split 2/1/0, leaving validation empty
    let mut f = fs::File::create(&corpus).unwrap();
    for id in ["a", "b", "c"] {
        writeln!(
            f,
            r#"{{"id": "{id}", "created_utc": "2024-01-01T00:00:00Z", "text": "comment {id}", "label": "Neutral"}}"#
        )
        .unwrap();
    }
    let out = tmp.path().join("out");
    let mut config = RunConfig::new(&corpus, Strategy::ZeroShot, EndpointSection::mock(), &out);
    config.corpus.subset = Subset::Validation;
    let err = run_evaluation(&config).unwrap_err();
    assert!(matches!(err, RunError::EmptySubset), "{err:?}");
    assert!(!out.exists());
}

#[test]
fn records_replay_to_the_reported_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    for strategy in Strategy::CATALOG {
        let out = tmp.path().join(strategy.name());
        let report = run_evaluation(&mock_config(strategy, &out)).unwrap();
        let file = read_records(&out.join("records.jsonl")).unwrap();
        assert_eq!(file.records.len(), file.header.n_items);
        let mut pairs = Vec::new();
        for r in &file.records {
            let last = r.phase_responses.last().unwrap();
            assert_eq!(
                parse_label(last).ok().map(|p| p.label),
                r.predicted,
                "{strategy}"
            );
            pairs.push((r.gold, r.predicted));
        }
        let recomputed = MetricsReport::from_matrix(&confusion_matrix(&pairs).unwrap());
        assert_eq!(recomputed, report.metrics, "{strategy}");
        assert_eq!(
            report_from_records(&out.join("records.jsonl")).unwrap(),
            report
        );
    }
}

#[test]
fn rerendered_report_is_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let again = tmp.path().join("again");
    let report = run_evaluation(&mock_config(Strategy::ZeroShot, &run)).unwrap();
    assert_eq!(rerender_report(&run, &again).unwrap(), report);
    for file in [REPORT_JSON, REPORT_MD, "confusion.csv"] {
        assert_eq!(
            fs::read(run.join(file)).unwrap(),
            fs::read(again.join(file)).unwrap()
        );
    }
}

#[test]
fn baseline_endpoint_runs_on_held_out_comments() {
    let tmp = tempfile::tempdir().unwrap();
    let config = RunConfig::new(
        fixture("comments12.jsonl"),
        Strategy::ZeroShot,
        EndpointSection::baseline(),
        tmp.path(),
    );
    let report = run_evaluation(&config).unwrap();
    assert_eq!(report.strategy, "tfidf-softmax");
    assert_eq!(report.subset, Subset::Test);
    let file = read_records(&tmp.path().join("records.jsonl")).unwrap();
    assert!(file
        .records
        .iter()
        .all(|r| r.attempts == 0 && r.predicted.is_some()));
}

fn http_config(url: &str, out: &Path) -> RunConfig {
    let mut endpoint = EndpointConfig::new("stub-model", url);
    endpoint.timeout_ms = 2000;
    endpoint.retry = RetryPolicy {
        max_attempts: 2,
        base_backoff_ms: 1,
        ..RetryPolicy::default()
    };
    let mut config = mock_config(Strategy::ZeroShot, out);
    config.endpoint = EndpointSection::Http(endpoint);
    config.concurrency = 3;
    config
}

#[test]
fn http_endpoint_run() {
    let server = StubServer::start(vec![Reply::ok(r#"[{"generated_text":" neutral."}]"#)]);
    let tmp = tempfile::tempdir().unwrap();
    let report = run_evaluation(&http_config(&server.url, tmp.path())).unwrap();
    assert_eq!(server.requests().len(), 12);
    assert_eq!(report.metrics.accuracy, 4.0 / 12.0);
    assert_eq!(report.total_attempts, 12);
    assert_eq!(
        report
            .confusion
            .count(StanceLabel::ProIsrael, StanceLabel::Neutral),
        4
    );
}

#[test]
fn auth_failure_halts_the_run() {
    let server = StubServer::start(vec![Reply::status(403, "{}")]);
    let tmp = tempfile::tempdir().unwrap();
    let err = run_evaluation(&http_config(&server.url, tmp.path())).unwrap_err();
    match err {
        RunError::Halted {
            completed,
            total,
            source,
        } => {
            assert_eq!(completed, 0);
            assert_eq!(total, 12);
            assert!(matches!(
                *source,
                RunError::Llm(LlmError::Auth { status: 403, .. })
            ));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(!tmp.path().join(REPORT_JSON).exists());
}

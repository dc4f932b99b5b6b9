//! Evaluation runs: corpus preparation, prompting or baseline prediction,
//! incremental record keeping and report emission.
//!
//! A run writes `records.jsonl` into its output directory one comment at a
//! time, in evaluation order. Re-running the same config over the same
//! directory resumes after the last complete record; a changed config,
//! corpus or template set is refused. With the mock endpoint every output
//! file is a pure function of the config and its input files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use thiserror::Error;

mod config;
mod records;
mod report;

pub use config::{CorpusSection, EndpointSection, RunConfig, StrategySection};
pub use records::{
    read_records, RecordWriter, RecordsFile, RunHeader, RunRecord, RECORDS_FILE,
    RECORDS_FORMAT_VERSION,
};
pub use report::{emit_report, EvalReport, ReportFormat, CONFUSION_CSV, REPORT_JSON, REPORT_MD};

use crate::corpus::{
    deduplicate, filter_by_keywords, load_labeled, split_dataset, CorpusError, DatasetSplit,
    KeywordFilter, LabeledComment, SplitRatios, Subset,
};
use crate::llm::{CompletionModel, HttpClient, LlmError, MockModel, MockRules};
use crate::parse::{ParseError, SynonymTable};
use crate::prompt::{
    audit_leakage, render_phase, select_exemplars, Exemplar, LeakageFinding, PromptCompiler,
    PromptError, Strategy, TemplateSet,
};
use crate::vectorize::{BaselineModel, VectorizeError, VectorizerKind};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid run config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Vectorize(#[from] VectorizeError),
    #[error("the selected subset contains no comments")]
    EmptySubset,
    #[error("comment `{0}` has no gold label and cannot be evaluated")]
    MissingGold(String),
    #[error("exemplars duplicate evaluated comments: {0:?}")]
    Leakage(Vec<LeakageFinding>),
    #[error("{path}: {message}")]
    Records { path: PathBuf, message: String },
    #[error("existing records were produced by a different run ({0}); use a fresh output directory or discard them")]
    ResumeMismatch(String),
    #[error("run halted after {completed} of {total} comments; rerun to resume: {source}")]
    Halted {
        completed: usize,
        total: usize,
        source: Box<RunError>,
    },
}

impl RunError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = RunError> = std::result::Result<T, E>;

/// Loads, optionally keyword-filters, deduplicates and splits the corpus
/// named in `config`.
pub fn prepare_split(config: &RunConfig) -> Result<DatasetSplit> {
    let mut comments = load_labeled(&config.corpus.path, config.corpus_format()?)?;
    if let Some(path) = &config.corpus.keywords {
        let filter = KeywordFilter::from_file(path, false)?;
        comments = filter_by_keywords(&comments, &filter);
    }
    let comments = deduplicate(&comments);
    Ok(split_dataset(
        &comments,
        SplitRatios::default(),
        config.corpus.split_seed,
    )?)
}

enum Engine {
    Prompted {
        model: Box<dyn CompletionModel>,
        compiler: PromptCompiler,
        strategy: Strategy,
        exemplars: Vec<Exemplar>,
        synonyms: SynonymTable,
    },
    Baseline {
        model: BaselineModel,
        name: String,
    },
}

impl Engine {
    fn strategy_name(&self) -> String {
        match self {
            Engine::Prompted { strategy, .. } => strategy.name().to_string(),
            Engine::Baseline { name, .. } => name.clone(),
        }
    }

    fn evaluate(&self, comment: &LabeledComment, endpoint_name: &str) -> Result<RunRecord> {
        let gold = comment
            .gold
            .ok_or_else(|| RunError::MissingGold(comment.id.clone()))?;
        match self {
            Engine::Baseline { model, name } => {
                let label = model.predict(&comment.text)?;
                Ok(RunRecord {
                    comment_id: comment.id.clone(),
                    strategy: name.clone(),
                    endpoint_name: endpoint_name.to_string(),
                    phase_prompts: vec![comment.text.clone()],
                    phase_responses: vec![label.name().to_string()],
                    predicted: Some(label),
                    rule_id: None,
                    scores: None,
                    gold,
                    attempts: 0,
                    latency_ms: 0,
                    rate_limited: false,
                    exemplar_ids: vec![],
                })
            }
            Engine::Prompted {
                model,
                compiler,
                strategy,
                exemplars,
                synonyms,
            } => {
                let plan = compiler.build_plan(*strategy, comment, exemplars)?;
                let mut prompts = Vec::with_capacity(plan.phases.len());
                let mut responses: Vec<String> = Vec::with_capacity(plan.phases.len());
                let mut attempts = 0;
                let mut latency_ms = 0;
                let mut rate_limited = false;
                for phase in &plan.phases {
                    let prior = responses.last().filter(|_| phase.consumes_prior());
                    let prompt = render_phase(phase, prior.map(String::as_str))?;
                    let result = model.complete(&prompt)?;
                    attempts += result.attempts;
                    latency_ms += result.latency.as_millis() as u64;
                    rate_limited |= result.rate_limited();
                    prompts.push(prompt);
                    responses.push(result.text);
                }
                let scores = match strategy {
                    Strategy::ScoringReflectiveReread => {
                        match synonyms.parse_scores(&responses[0]) {
                            Ok(s) => Some(s),
                            Err(e) => {
                                log::warn!("{}: unusable scores: {e}", comment.id);
                                None
                            }
                        }
                    }
                    _ => None,
                };
                let parsed = synonyms
                    .parse_label(responses.last().expect("plans have phases"))
                    .ok();
                Ok(RunRecord {
                    comment_id: comment.id.clone(),
                    strategy: strategy.name().to_string(),
                    endpoint_name: model.name().to_string(),
                    phase_prompts: prompts,
                    phase_responses: responses,
                    predicted: parsed.as_ref().map(|p| p.label),
                    rule_id: parsed.map(|p| p.rule_id),
                    scores,
                    gold,
                    attempts,
                    latency_ms,
                    rate_limited,
                    exemplar_ids: plan.exemplars.iter().map(|e| e.id.clone()).collect(),
                })
            }
        }
    }
}

fn build_engine(
    config: &RunConfig,
    split: &DatasetSplit,
    eval: &[&LabeledComment],
    templates: &TemplateSet,
) -> Result<Engine> {
    if let EndpointSection::Baseline {
        model,
        vectorizer,
        min_df,
        train,
    } = &config.endpoint
    {
        let model = match model {
            Some(path) => BaselineModel::load(path)?,
            None => {
                let examples: Vec<(&str, _)> = split
                    .train
                    .iter()
                    .filter_map(|c| Some((c.text.as_str(), c.gold?)))
                    .collect();
                BaselineModel::train(&examples, *vectorizer, *min_df, train)?
            }
        };
        let name = match model.vectorizer {
            VectorizerKind::Bow => "bow-softmax",
            VectorizerKind::Tfidf => "tfidf-softmax",
        };
        return Ok(Engine::Baseline {
            model,
            name: name.to_string(),
        });
    }

    let strategy = config.strategy.name;
    let k = strategy.required_exemplars();
    let exemplars = if k > 0 {
        select_exemplars(&split.train, k, config.strategy.exemplar_seed)?
    } else {
        Vec::new()
    };
    let compiler =
        PromptCompiler::new(templates.clone()).forbid_exemplars(eval.iter().map(|c| c.id.clone()));
    if !exemplars.is_empty() {
        let plans = eval
            .iter()
            .map(|c| compiler.build_plan(strategy, c, &exemplars))
            .collect::<Result<Vec<_>, _>>()?;
        let findings = audit_leakage(&plans, eval);
        if !findings.is_empty() {
            return Err(RunError::Leakage(findings));
        }
    }
    let synonyms = match &config.strategy.synonyms {
        Some(path) => SynonymTable::from_file(path)?,
        None => SynonymTable::builtin().clone(),
    };
    let model: Box<dyn CompletionModel> = match &config.endpoint {
        EndpointSection::Mock { rules } => Box::new(MockModel::new(match rules {
            Some(path) => MockRules::from_file(path)?,
            None => MockRules::default(),
        })),
        EndpointSection::Http(endpoint) => Box::new(HttpClient::new(endpoint.clone())?),
        EndpointSection::Baseline { .. } => unreachable!("handled above"),
    };
    Ok(Engine::Prompted {
        model,
        compiler,
        strategy,
        exemplars,
        synonyms,
    })
}

/// Runs (or resumes) an evaluation and writes `records.jsonl`,
/// `report.json`, `report.md` and `confusion.csv` into the output
/// directory.
pub fn run_evaluation(config: &RunConfig) -> Result<EvalReport> {
    config.validate()?;
    let templates = match &config.strategy.templates_dir {
        Some(dir) => TemplateSet::with_overrides(dir)?,
        None => TemplateSet::builtin(),
    };
    let split = prepare_split(config)?;
    let subset = config.corpus.subset;
    let eval = split.subset(subset);
    if eval.is_empty() {
        return Err(RunError::EmptySubset);
    }
    if let Some(c) = eval.iter().find(|c| c.gold.is_none()) {
        return Err(RunError::MissingGold(c.id.clone()));
    }
    if matches!(subset, Subset::All | Subset::Train)
        && matches!(config.endpoint, EndpointSection::Baseline { .. })
    {
        log::warn!("evaluating the baseline on comments it was trained on");
    }
    let engine = build_engine(config, &split, &eval, &templates)?;

    let template_hashes = match &engine {
        Engine::Prompted { strategy, .. } => strategy
            .template_ids()
            .iter()
            .map(|id| Ok((id.to_string(), templates.hash(id)?)))
            .collect::<Result<BTreeMap<_, _>>>()?,
        Engine::Baseline { .. } => BTreeMap::new(),
    };
    let endpoint_name = config.endpoint.name().to_string();
    let header = RunHeader {
        format_version: RECORDS_FORMAT_VERSION,
        config_hash: config.fingerprint()?,
        strategy: engine.strategy_name(),
        endpoint_name: endpoint_name.clone(),
        subset,
        n_items: eval.len(),
        template_hashes,
    };

    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let records_path = dir.join(RECORDS_FILE);
    let (mut writer, done) = if records_path.exists() && !config.fresh {
        let existing = read_records(&records_path)?;
        check_resumable(&existing, &header, &eval)?;
        let done = existing.records.len();
        log::info!("resuming after {done} of {} comments", eval.len());
        (
            RecordWriter::resume(&records_path, existing.valid_len)?,
            done,
        )
    } else {
        (RecordWriter::create(&records_path, &header)?, 0)
    };

    let remaining = &eval[done..];
    let committed = execute(
        &engine,
        remaining,
        config.concurrency,
        &endpoint_name,
        |rec| {
            writer
                .append(rec)
                .map_err(|e| RunError::io(&records_path, e))
        },
    );
    drop(writer);
    if let Err((n, err)) = committed {
        return Err(RunError::Halted {
            completed: done + n,
            total: eval.len(),
            source: Box::new(err),
        });
    }

    let mut report = report_from_records(&records_path)?;
    if config.timestamps {
        report.generated_at =
            Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    }
    emit_report(&report, dir, &[ReportFormat::Records, ReportFormat::Table])?;
    Ok(report)
}

fn check_resumable(
    existing: &RecordsFile,
    header: &RunHeader,
    eval: &[&LabeledComment],
) -> Result<()> {
    let old = &existing.header;
    let mismatch = |what: &str| Err(RunError::ResumeMismatch(what.to_string()));
    if old.config_hash != header.config_hash {
        return mismatch("config hash differs");
    }
    if old.template_hashes != header.template_hashes {
        return mismatch("template hashes differ");
    }
    if old != header {
        return mismatch("run header differs");
    }
    if existing.records.len() > eval.len()
        || existing
            .records
            .iter()
            .zip(eval)
            .any(|(r, c)| r.comment_id != c.id)
    {
        return mismatch("recorded comments do not match the evaluation order");
    }
    Ok(())
}

/// Evaluates `items` on up to `concurrency` threads and hands records to
/// `commit` strictly in input order. On failure returns how many records
/// were committed together with the first error.
fn execute(
    engine: &Engine,
    items: &[&LabeledComment],
    concurrency: usize,
    endpoint_name: &str,
    mut commit: impl FnMut(&RunRecord) -> Result<()>,
) -> std::result::Result<usize, (usize, RunError)> {
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Result<RunRecord>)>();
    let mut committed = 0;
    let mut failure: Option<(usize, RunError)> = None;

    thread::scope(|scope| {
        for _ in 0..concurrency.min(items.len()) {
            let tx = tx.clone();
            let (next, stop) = (&next, &stop);
            scope.spawn(move || {
                while !stop.load(Ordering::SeqCst) {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(comment) = items.get(i) else { break };
                    let result = engine.evaluate(comment, endpoint_name);
                    let failed = result.is_err();
                    if failed {
                        stop.store(true, Ordering::SeqCst);
                    }
                    if tx.send((i, result)).is_err() || failed {
                        break;
                    }
                }
            });
        }
        drop(tx);

        let mut pending = BTreeMap::new();
        for (i, result) in rx {
            match result {
                Ok(record) => {
                    pending.insert(i, record);
                }
                Err(e) => {
                    if failure.as_ref().is_none_or(|(j, _)| i < *j) {
                        failure = Some((i, e));
                    }
                }
            }
            while let Some(record) = pending.remove(&committed) {
                if let Err(e) = commit(&record) {
                    stop.store(true, Ordering::SeqCst);
                    failure = Some((committed, e));
                    pending.clear();
                    break;
                }
                log::debug!("{} -> {:?}", record.comment_id, record.predicted);
                committed += 1;
            }
        }
    });

    match failure {
        Some((_, e)) => Err((committed, e)),
        None => Ok(committed),
    }
}

/// Recomputes the report from a records file.
pub fn report_from_records(path: &Path) -> Result<EvalReport> {
    let file = read_records(path)?;
    EvalReport::from_records(&file.header, &file.records)
}

/// Re-renders the report files for the run in `run_dir` into `out_dir`.
pub fn rerender_report(run_dir: &Path, out_dir: &Path) -> Result<EvalReport> {
    let report = report_from_records(&run_dir.join(RECORDS_FILE))?;
    emit_report(
        &report,
        out_dir,
        &[ReportFormat::Records, ReportFormat::Table],
    )?;
    Ok(report)
}

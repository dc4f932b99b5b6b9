//! Command-line interface of the `stancebench` binary.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::annotation::{agreement_report, majority_label, rows_from_comments};
use crate::corpus::{
    deduplicate, filter_by_keywords, keyword_frequency, label_distribution, load_labeled,
    split_dataset, temporal_distribution, write_jsonl, KeywordFilter, LabeledComment, RecordFormat,
    SplitRatios, StanceLabel, Subset,
};
use crate::metrics::{confusion_matrix, MetricsReport};
use crate::prompt::Strategy;
use crate::runner::{rerender_report, run_evaluation, EndpointSection, RunConfig};
use crate::vectorize::{BaselineModel, TrainConfig, VectorizerKind};

#[derive(Debug, Parser)]
#[command(
    name = "stancebench",
    version,
    about = "Stance-classification evaluation harness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, keyword-filter, deduplicate and truncate a corpus; write JSONL.
    Ingest(IngestArgs),
    /// Keyword frequencies, monthly volume and label distribution.
    Stats(StatsArgs),
    /// Majority labels and Fleiss' kappa over annotator columns.
    Agree(AgreeArgs),
    /// Write the train/test/validation manifest as CSV (`id,subset`).
    Split(SplitArgs),
    /// Train the bag-of-words/TF-IDF softmax baseline on the train split.
    TrainBaseline(TrainArgs),
    /// Run an evaluation (resumes when the output directory has records).
    Run(RunArgs),
    /// Re-render report files from a run's records.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Corpus file (.csv, .tsv or .jsonl).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Overrides the format inferred from the extension.
    #[arg(long)]
    pub format: Option<RecordFormat>,
}

impl InputArgs {
    fn load(&self) -> Result<Vec<LabeledComment>> {
        let format = match self.format {
            Some(f) => f,
            None => RecordFormat::from_path(&self.input).with_context(|| {
                format!(
                    "cannot infer the format of {}; pass --format",
                    self.input.display()
                )
            })?,
        };
        load_labeled(&self.input, format)
            .with_context(|| format!("loading {}", self.input.display()))
    }
}

#[derive(Debug, Args)]
pub struct KeywordArgs {
    /// Keyword list, one per line; the built-in list when absent.
    #[arg(long)]
    pub keywords: Option<PathBuf>,
    #[arg(long)]
    pub case_sensitive: bool,
}

impl KeywordArgs {
    fn filter(&self) -> Result<KeywordFilter> {
        Ok(match &self.keywords {
            Some(p) => KeywordFilter::from_file(p, self.case_sensitive)?,
            None if self.case_sensitive => {
                KeywordFilter::parse(crate::corpus::DEFAULT_KEYWORDS, true)?
            }
            None => KeywordFilter::default_keywords(),
        })
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub keywords: KeywordArgs,
    /// Keep comments that match no keyword.
    #[arg(long)]
    pub no_filter: bool,
    /// Output JSONL; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub keywords: KeywordArgs,
    /// Number of keywords to list.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Debug, Args)]
pub struct AgreeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Also write `id,label` majority labels to this CSV file.
    #[arg(long)]
    pub majority_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Manifest CSV; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Split seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "tfidf")]
    pub vectorizer: VectorizerKind,
    #[arg(long, default_value_t = 1)]
    pub min_df: usize,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// Seed for mini-batch order.
    #[arg(long, default_value_t = 0)]
    pub train_seed: u64,
    /// Where to save the model (JSON).
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run config (TOML). Without it the corpus, strategy and endpoint
    /// flags describe the run; `--output` overrides the config's directory.
    #[arg(long, conflicts_with_all = ["corpus", "strategy", "endpoint", "mock_rules"])]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value = "zero-shot")]
    pub strategy: Option<Strategy>,
    /// `mock` or `baseline`; HTTP endpoints need a config file.
    #[arg(long, default_value = "mock")]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Mock rule table (TOML).
    #[arg(long)]
    pub mock_rules: Option<PathBuf>,
    #[arg(long)]
    pub subset: Option<Subset>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long)]
    pub exemplar_seed: Option<u64>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// Discard existing records instead of resuming.
    #[arg(long)]
    pub fresh: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directory containing `records.jsonl`.
    #[arg(long)]
    pub run: PathBuf,
    /// Where to write the report files; the run directory when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = io::stdout();
    match execute(cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn output_sink<'a>(
    path: &Option<PathBuf>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(stdout),
    })
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a, out),
        Command::Stats(a) => stats(a, out),
        Command::Agree(a) => agree(a, out),
        Command::Split(a) => split(a, out),
        Command::TrainBaseline(a) => train_baseline(a, out),
        Command::Run(a) => run(a, out),
        Command::Report(a) => report(a, out),
    }
}

fn ingest(a: IngestArgs, out: &mut dyn Write) -> Result<()> {
    let loaded = a.input.load()?;
    let filtered = if a.no_filter {
        loaded.clone()
    } else {
        filter_by_keywords(&loaded, &a.keywords.filter()?)
    };
    let kept = deduplicate(&filtered);
    let mut sink = output_sink(&a.output, out)?;
    write_jsonl(&kept, &mut sink)?;
    sink.flush()?;
    eprintln!(
        "loaded {} comments, {} after keyword filter, {} after deduplication",
        loaded.len(),
        filtered.len(),
        kept.len()
    );
    Ok(())
}

fn stats(a: StatsArgs, out: &mut dyn Write) -> Result<()> {
    let comments = a.input.load()?;
    let filter = a.keywords.filter()?;
    writeln!(out, "comments: {}", comments.len())?;
    writeln!(out, "\nkeyword frequency:")?;
    for (kw, n) in keyword_frequency(&comments, &filter, a.top) {
        writeln!(out, "  {kw}\t{n}")?;
    }
    writeln!(out, "\nmonthly volume:")?;
    for (month, n) in temporal_distribution(&comments) {
        writeln!(out, "  {month}\t{n}")?;
    }
    let labels = label_distribution(&comments);
    writeln!(out, "\nlabels:")?;
    for l in StanceLabel::ALL {
        writeln!(out, "  {l}\t{}", labels.get(l))?;
    }
    writeln!(out, "  unlabeled\t{}", labels.unlabeled)?;
    Ok(())
}

fn agree(a: AgreeArgs, out: &mut dyn Write) -> Result<()> {
    let comments = a.input.load()?;
    let annotated: Vec<LabeledComment> = comments
        .into_iter()
        .filter(|c| !c.annotator_labels.is_empty())
        .collect();
    if annotated.is_empty() {
        bail!("{} has no annotator columns", a.input.input.display());
    }
    let rows = rows_from_comments(&annotated)?;
    let report = agreement_report(&rows)?;
    let mut counts = [0usize; 3];
    let mut majority = Vec::with_capacity(rows.len());
    for row in &rows {
        let label = majority_label(&row.labels)?;
        counts[label.index()] += 1;
        majority.push((row.comment_id.as_str(), label));
    }
    writeln!(out, "{}", report.summary_line())?;
    writeln!(
        out,
        "majority labels: {}",
        StanceLabel::ALL
            .iter()
            .map(|l| format!("{l}={}", counts[l.index()]))
            .collect::<Vec<_>>()
            .join(" ")
    )?;
    if let Some(path) = &a.majority_out {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["id", "label"])?;
        for (id, label) in majority {
            w.write_record([id, label.name()])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn split(a: SplitArgs, out: &mut dyn Write) -> Result<()> {
    let comments = a.input.load()?;
    let split = split_dataset(&comments, SplitRatios::default(), a.seed)?;
    let (train, test, validation) = split.sizes();
    let mut sink = output_sink(&a.output, out)?;
    split.write_manifest(&mut sink)?;
    sink.flush()?;
    eprintln!("train={train} test={test} validation={validation}");
    Ok(())
}

fn train_baseline(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let comments = a.input.load()?;
    let split = split_dataset(&comments, SplitRatios::default(), a.seed)?;
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        epochs: a.epochs.unwrap_or(defaults.epochs),
        learning_rate: a.learning_rate.unwrap_or(defaults.learning_rate),
        batch_size: a.batch_size.unwrap_or(defaults.batch_size),
        l2: a.l2.unwrap_or(defaults.l2),
        seed: a.train_seed,
    };
    let examples: Vec<(&str, StanceLabel)> = split
        .train
        .iter()
        .filter_map(|c| Some((c.text.as_str(), c.gold?)))
        .collect();
    let model = BaselineModel::train(&examples, a.vectorizer, a.min_df, &config)?;
    model.save(&a.output)?;
    writeln!(
        out,
        "trained on {} comments, {} features, final loss {:.6}",
        examples.len(),
        model.n_features,
        model
            .model
            .metadata
            .as_ref()
            .map_or(f64::NAN, |m| m.final_loss)
    )?;
    for (name, subset) in [("validation", Subset::Validation), ("test", Subset::Test)] {
        let pairs = split
            .subset(subset)
            .into_iter()
            .filter_map(|c| Some((c.gold?, Some(model.predict(&c.text).ok()?))))
            .collect::<Vec<_>>();
        if let Ok(m) = confusion_matrix(&pairs) {
            writeln!(out, "\n{name}:\n")?;
            write!(
                out,
                "{}",
                MetricsReport::from_matrix(&m).summary_table("baseline")
            )?;
        }
    }
    Ok(())
}

fn run(a: RunArgs, out: &mut dyn Write) -> Result<()> {
    let mut config = match &a.config {
        Some(path) => RunConfig::from_file(path)?,
        None => {
            let corpus = a
                .corpus
                .clone()
                .context("--corpus is required without --config")?;
            let output = a
                .output
                .clone()
                .context("--output is required without --config")?;
            let endpoint = match a.endpoint.as_deref().unwrap_or("mock") {
                "mock" => EndpointSection::Mock {
                    rules: a.mock_rules.clone(),
                },
                "baseline" => EndpointSection::baseline(),
                other => bail!("unknown endpoint `{other}`; use mock, baseline, or a config file for HTTP endpoints"),
            };
            RunConfig::new(
                corpus,
                a.strategy.unwrap_or(Strategy::ZeroShot),
                endpoint,
                output,
            )
        }
    };
    if let (Some(_), Some(dir)) = (&a.config, &a.output) {
        config.output_dir = dir.clone();
    }
    if let Some(s) = a.subset {
        config.corpus.subset = s;
    }
    if let Some(s) = a.split_seed {
        config.corpus.split_seed = s;
    }
    if let Some(s) = a.exemplar_seed {
        config.strategy.exemplar_seed = s;
    }
    if let Some(c) = a.concurrency {
        config.concurrency = c;
    }
    config.fresh |= a.fresh;
    let report = run_evaluation(&config)?;
    write!(
        out,
        "{}",
        report.metrics.summary_table(&report.model_label())
    )?;
    writeln!(out, "\nreport written to {}", config.output_dir.display())?;
    Ok(())
}

fn report(a: ReportArgs, out: &mut dyn Write) -> Result<()> {
    let target: &Path = a.output.as_deref().unwrap_or(&a.run);
    let report = rerender_report(&a.run, target)?;
    write!(out, "{}", report.to_markdown())?;
    Ok(())
}

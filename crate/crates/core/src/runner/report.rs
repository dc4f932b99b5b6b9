//! Report files written next to `records.jsonl`:
//!
//! | file            | content                                                       |
//! |-----------------|---------------------------------------------------------------|
//! | `report.json`   | the full [`EvalReport`]                                       |
//! | `report.md`     | summary table, class-wise table, confusion matrix, unparsed ids |
//! | `confusion.csv` | `gold,Neutral,Pro-Israel,Pro-Palestine,Unparsed`, one row per gold class |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::records::{RunHeader, RunRecord};
use super::{Result, RunError};
use crate::corpus::{StanceLabel, Subset};
use crate::metrics::{confusion_matrix, ConfusionMatrix, MetricsReport};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";
pub const CONFUSION_CSV: &str = "confusion.csv";

/// Display order of classes in every table.
const TABLE_ORDER: [StanceLabel; 3] = [
    StanceLabel::Neutral,
    StanceLabel::ProIsrael,
    StanceLabel::ProPalestine,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_hash: String,
    pub template_hashes: BTreeMap<String, String>,
    pub strategy: String,
    pub endpoint_name: String,
    pub subset: Subset,
    pub metrics: MetricsReport,
    pub confusion: ConfusionMatrix,
    /// Ids of comments whose final response yielded no label.
    pub unparsed: Vec<String>,
    /// Completions that hit the endpoint's rate limit at least once.
    pub rate_limited: usize,
    pub total_attempts: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
}

impl EvalReport {
    /// Computes the report from a run's records.
    pub fn from_records(header: &RunHeader, records: &[RunRecord]) -> Result<Self> {
        let pairs: Vec<_> = records.iter().map(|r| (r.gold, r.predicted)).collect();
        let confusion = confusion_matrix(&pairs).map_err(|_| RunError::EmptySubset)?;
        Ok(Self {
            config_hash: header.config_hash.clone(),
            template_hashes: header.template_hashes.clone(),
            strategy: header.strategy.clone(),
            endpoint_name: header.endpoint_name.clone(),
            subset: header.subset,
            metrics: MetricsReport::from_matrix(&confusion),
            confusion,
            unparsed: records
                .iter()
                .filter(|r| r.predicted.is_none())
                .map(|r| r.comment_id.clone())
                .collect(),
            rate_limited: records.iter().filter(|r| r.rate_limited).count(),
            total_attempts: records.iter().map(|r| r.attempts as u64).sum(),
            generated_at: None,
        })
    }

    pub fn model_label(&self) -> String {
        format!("{} ({})", self.endpoint_name, self.strategy)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Evaluation report\n\n");
        let _ = writeln!(out, "- Strategy: {}", self.strategy);
        let _ = writeln!(out, "- Endpoint: {}", self.endpoint_name);
        let _ = writeln!(
            out,
            "- Subset: {} ({} comments)",
            self.subset.name(),
            self.metrics.n
        );
        let _ = writeln!(out, "- Config hash: `{}`", self.config_hash);
        let _ = writeln!(out, "- Rate-limited completions: {}", self.rate_limited);
        let _ = writeln!(out, "- Endpoint attempts: {}", self.total_attempts);
        if let Some(at) = &self.generated_at {
            let _ = writeln!(out, "- Generated at: {at}");
        }
        out.push_str("\n## Summary\n\n");
        out.push_str(&self.metrics.summary_table(&self.model_label()));
        out.push_str("\n## Class-wise metrics\n\n");
        out.push_str(&self.metrics.class_table());
        out.push_str("\nCells marked `*` divide zero by zero and are reported as 0.\n");
        out.push_str("\n## Confusion matrix\n\nRows are gold labels, columns are predictions.\n\n");
        out.push_str("| Gold \\ Predicted |");
        for p in TABLE_ORDER {
            let _ = write!(out, " {p} |");
        }
        out.push_str(" Unparsed |\n|---|---|---|---|---|\n");
        for g in TABLE_ORDER {
            let _ = write!(out, "| {g} |");
            for p in TABLE_ORDER {
                let _ = write!(out, " {} |", self.confusion.count(g, p));
            }
            let _ = writeln!(out, " {} |", self.confusion.unparsed(g));
        }
        out.push_str("\n## Unparsed responses\n\n");
        if self.unparsed.is_empty() {
            out.push_str("None.\n");
        } else {
            for id in &self.unparsed {
                let _ = writeln!(out, "- {id}");
            }
        }
        out
    }

    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("gold");
        for p in TABLE_ORDER {
            let _ = write!(out, ",{p}");
        }
        out.push_str(",Unparsed\n");
        for g in TABLE_ORDER {
            out.push_str(g.name());
            for p in TABLE_ORDER {
                let _ = write!(out, ",{}", self.confusion.count(g, p));
            }
            let _ = writeln!(out, ",{}", self.confusion.unparsed(g));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// `report.md` and `confusion.csv`.
    Table,
    /// `report.json`.
    Records,
}

/// Writes the requested report files into `dir`.
pub fn emit_report(report: &EvalReport, dir: &Path, formats: &[ReportFormat]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let write = |name: &str, body: &str| {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| RunError::io(&path, e))
    };
    for format in formats {
        match format {
            ReportFormat::Table => {
                write(REPORT_MD, &report.to_markdown())?;
                write(CONFUSION_CSV, &report.confusion_csv())?;
            }
            ReportFormat::Records => {
                let mut json =
                    serde_json::to_string_pretty(report).expect("reports always serialize");
                json.push('\n');
                write(REPORT_JSON, &json)?;
            }
        }
    }
    Ok(())
}

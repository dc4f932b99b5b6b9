//! Corpus files: CSV, TSV and JSON-lines records with the fields `id`,
//! `created_utc`, `text`, and optionally `label` and `annotator_1..3`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Timelike, Utc};
use serde::{Deserialize, Serialize};

use super::{CorpusError, LabeledComment, RawComment, Result, StanceLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    Csv,
    Tsv,
    Jsonl,
}

impl RecordFormat {
    /// Guesses the format from the file extension (`.csv`, `.tsv`,
    /// `.jsonl`/`.ndjson`/`.json`).
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "csv" => Some(RecordFormat::Csv),
            "tsv" => Some(RecordFormat::Tsv),
            "jsonl" | "ndjson" | "json" => Some(RecordFormat::Jsonl),
            _ => None,
        }
    }
}

impl FromStr for RecordFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(RecordFormat::Csv),
            "tsv" => Ok(RecordFormat::Tsv),
            "jsonl" | "ndjson" => Ok(RecordFormat::Jsonl),
            _ => Err(CorpusError::UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct CorpusRecord {
    id: String,
    created_utc: TimestampField,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truncated_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    annotator_1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    annotator_2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    annotator_3: Option<String>,
}

/// Timestamps arrive as ISO-8601 strings, or as epoch seconds in dumps.
#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum TimestampField {
    Text(String),
    Epoch(f64),
}

fn parse_timestamp(field: &TimestampField) -> std::result::Result<DateTime<Utc>, String> {
    let parsed = match field {
        TimestampField::Epoch(secs) => DateTime::from_timestamp(secs.floor() as i64, 0)
            .ok_or_else(|| format!("epoch timestamp {secs} out of range"))?,
        TimestampField::Text(s) => {
            let s = s.trim();
            if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
                dt.with_timezone(&Utc)
            } else if let Some(dt) = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
                .iter()
                .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
            {
                dt.and_utc()
            } else if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
                d.and_hms_opt(0, 0, 0).expect("midnight is valid").and_utc()
            } else if let Ok(secs) = s.parse::<f64>() {
                return parse_timestamp(&TimestampField::Epoch(secs));
            } else {
                return Err(format!("unparseable created_utc `{s}`"));
            }
        }
    };
    Ok(parsed
        .with_nanosecond(0)
        .expect("zero nanoseconds is valid"))
}

fn non_empty(field: &Option<String>) -> Option<&str> {
    field.as_deref().map(str::trim).filter(|s| !s.is_empty())
}

fn parse_label_field(field: &Option<String>, line: u64) -> Result<Option<StanceLabel>> {
    non_empty(field)
        .map(|s| {
            s.parse().map_err(|_| CorpusError::Malformed {
                line,
                message: format!("unknown label `{s}`"),
            })
        })
        .transpose()
}

fn record_to_comment(record: CorpusRecord, line: u64) -> Result<LabeledComment> {
    if record.id.trim().is_empty() {
        return Err(CorpusError::Malformed {
            line,
            message: "empty `id`".into(),
        });
    }
    let created_utc = parse_timestamp(&record.created_utc)
        .map_err(|message| CorpusError::Malformed { line, message })?;
    let gold = parse_label_field(&record.label, line)?;
    let annotators = [
        &record.annotator_1,
        &record.annotator_2,
        &record.annotator_3,
    ]
    .into_iter()
    .map(|f| parse_label_field(f, line))
    .collect::<Result<Vec<_>>>()?;
    let annotator_labels: Vec<StanceLabel> = annotators.iter().flatten().copied().collect();
    if !annotator_labels.is_empty() && annotator_labels.len() != 3 {
        return Err(CorpusError::Malformed {
            line,
            message: format!(
                "{} of 3 annotator labels present; rows need all three or none",
                annotator_labels.len()
            ),
        });
    }
    let raw = RawComment {
        id: record.id,
        created_utc,
        text: record.text,
    };
    LabeledComment::new(raw, gold, annotator_labels).map_err(|e| CorpusError::Malformed {
        line,
        message: e.to_string(),
    })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_records(path: &Path, format: RecordFormat) -> Result<Vec<(u64, CorpusRecord)>> {
    let file = open(path)?;
    match format {
        RecordFormat::Jsonl => {
            let mut out = Vec::new();
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line_no = idx as u64 + 1;
                let line = line.map_err(|source| CorpusError::Io {
                    path: path.to_path_buf(),
                    source,
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                let record = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                    line: line_no,
                    message: e.to_string(),
                })?;
                out.push((line_no, record));
            }
            Ok(out)
        }
        RecordFormat::Csv | RecordFormat::Tsv => {
            let delimiter = if format == RecordFormat::Csv {
                b','
            } else {
                b'\t'
            };
            let mut reader = csv::ReaderBuilder::new()
                .delimiter(delimiter)
                .trim(csv::Trim::Headers)
                .from_reader(file);
            let headers = reader
                .headers()
                .map_err(|e| CorpusError::Malformed {
                    line: 1,
                    message: e.to_string(),
                })?
                .clone();
            let mut out = Vec::new();
            for row in reader.records() {
                let row = row.map_err(|e| CorpusError::Malformed {
                    line: e.position().map_or(0, |p| p.line()),
                    message: e.to_string(),
                })?;
                let line = row.position().map_or(0, |p| p.line());
                let record =
                    row.deserialize(Some(&headers))
                        .map_err(|e| CorpusError::Malformed {
                            line,
                            message: e.to_string(),
                        })?;
                out.push((line, record));
            }
            Ok(out)
        }
    }
}

/// Loads every record with its labels. Ids must be unique.
pub fn load_labeled(path: &Path, format: RecordFormat) -> Result<Vec<LabeledComment>> {
    let records = read_records(path, format)?;
    let mut seen = HashSet::with_capacity(records.len());
    let mut out = Vec::with_capacity(records.len());
    for (line, record) in records {
        let comment = record_to_comment(record, line)?;
        if !seen.insert(comment.id.clone()) {
            return Err(CorpusError::DuplicateId {
                id: comment.id,
                line,
            });
        }
        out.push(comment);
    }
    Ok(out)
}

/// Loads the raw comments of a corpus file in file order.
pub fn load_corpus(path: &Path, format: RecordFormat) -> Result<Vec<RawComment>> {
    Ok(load_labeled(path, format)?
        .into_iter()
        .map(|c| RawComment {
            id: c.id,
            created_utc: c.created_utc,
            text: c.text,
        })
        .collect())
}

/// Writes comments as JSON lines, including `truncated_text`. The output is
/// itself a valid corpus file.
pub fn write_jsonl<W: Write>(comments: &[LabeledComment], mut out: W) -> std::io::Result<()> {
    for c in comments {
        let annotator = |i: usize| c.annotator_labels.get(i).map(|l| l.name().to_string());
        let record = CorpusRecord {
            id: c.id.clone(),
            created_utc: TimestampField::Text(
                c.created_utc.to_rfc3339_opts(SecondsFormat::Secs, true),
            ),
            text: c.text.clone(),
            truncated_text: Some(c.truncated_text.clone()),
            label: c.gold.map(|l| l.name().to_string()),
            annotator_1: annotator(0),
            annotator_2: annotator(1),
            annotator_3: annotator(2),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

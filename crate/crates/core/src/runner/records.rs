//! `records.jsonl`: one header line followed by one line per evaluated
//! comment, in evaluation order.
//!
//! ```text
//! {"kind":"header","format_version":1,"config_hash":"…","strategy":"zero-shot",…}
//! {"kind":"record","comment_id":"c01","strategy":"zero-shot","predicted":"Neutral",…}
//! ```
//!
//! `predicted` is `null` for unparsed responses.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Result, RunError};
use crate::corpus::{StanceLabel, Subset};
use crate::parse::ScoreTriple;

pub const RECORDS_FORMAT_VERSION: u32 = 1;
pub const RECORDS_FILE: &str = "records.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunHeader {
    pub format_version: u32,
    pub config_hash: String,
    pub strategy: String,
    pub endpoint_name: String,
    pub subset: Subset,
    /// Number of comments the run evaluates.
    pub n_items: usize,
    pub template_hashes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub comment_id: String,
    pub strategy: String,
    pub endpoint_name: String,
    pub phase_prompts: Vec<String>,
    pub phase_responses: Vec<String>,
    pub predicted: Option<StanceLabel>,
    /// Synonym rule that produced `predicted`.
    pub rule_id: Option<String>,
    pub scores: Option<ScoreTriple>,
    pub gold: StanceLabel,
    pub attempts: u32,
    pub latency_ms: u64,
    pub rate_limited: bool,
    pub exemplar_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line {
    Header(RunHeader),
    Record(RunRecord),
}

/// Contents of a records file.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordsFile {
    pub header: RunHeader,
    pub records: Vec<RunRecord>,
    /// Byte length of the complete lines; anything after it is a torn
    /// trailing write.
    pub valid_len: u64,
}

/// Reads a records file, tolerating a torn final line (a run killed
/// mid-write). A malformed line anywhere else is an error.
pub fn read_records(path: &Path) -> Result<RecordsFile> {
    let file = File::open(path).map_err(|e| RunError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut header = None;
    let mut records = Vec::new();
    let mut valid_len = 0u64;
    let mut line = String::new();
    let mut line_no = 0;
    loop {
        line.clear();
        let n = reader
            .read_line(&mut line)
            .map_err(|e| RunError::io(path, e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let complete = line.ends_with('\n');
        let parsed: std::result::Result<Line, _> = serde_json::from_str(line.trim_end());
        match parsed {
            Ok(_) if !complete => break,
            Err(_) if !complete => break,
            Ok(Line::Header(h)) if line_no == 1 => header = Some(h),
            Ok(Line::Record(r)) if line_no > 1 => records.push(r),
            Ok(_) => {
                return Err(RunError::Records {
                    path: path.to_path_buf(),
                    message: format!(
                        "line {line_no}: header must be the first line and only there"
                    ),
                })
            }
            Err(e) => {
                return Err(RunError::Records {
                    path: path.to_path_buf(),
                    message: format!("line {line_no}: {e}"),
                })
            }
        }
        valid_len += n as u64;
    }
    let header = header.ok_or_else(|| RunError::Records {
        path: path.to_path_buf(),
        message: "missing header line".into(),
    })?;
    if header.format_version != RECORDS_FORMAT_VERSION {
        return Err(RunError::Records {
            path: path.to_path_buf(),
            message: format!(
                "format version {} is not supported (expected {RECORDS_FORMAT_VERSION})",
                header.format_version
            ),
        });
    }
    Ok(RecordsFile {
        header,
        records,
        valid_len,
    })
}

/// Append-only writer; every line is flushed as soon as it is written.
pub struct RecordWriter {
    file: File,
}

impl RecordWriter {
    pub fn create(path: &Path, header: &RunHeader) -> Result<Self> {
        let file = File::create(path).map_err(|e| RunError::io(path, e))?;
        let mut w = Self { file };
        w.write_line(&Line::Header(header.clone()))
            .map_err(|e| RunError::io(path, e))?;
        Ok(w)
    }

    /// Reopens an existing file for appending after truncating it to
    /// `valid_len`.
    pub fn resume(path: &Path, valid_len: u64) -> Result<Self> {
        let file = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(|e| RunError::io(path, e))?;
        file.set_len(valid_len).map_err(|e| RunError::io(path, e))?;
        drop(file);
        let file = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| RunError::io(path, e))?;
        Ok(Self { file })
    }

    pub fn append(&mut self, record: &RunRecord) -> std::io::Result<()> {
        self.write_line(&Line::Record(record.clone()))
    }

    fn write_line(&mut self, line: &Line) -> std::io::Result<()> {
        let mut bytes = serde_json::to_vec(line)?;
        bytes.push(b'\n');
        self.file.write_all(&bytes)?;
        self.file.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> RunHeader {
        RunHeader {
            format_version: RECORDS_FORMAT_VERSION,
            config_hash: "abc".into(),
            strategy: "zero-shot".into(),
            endpoint_name: "mock".into(),
            subset: Subset::Test,
            n_items: 2,
            template_hashes: BTreeMap::from([("zero_shot".into(), "00".into())]),
        }
    }

    fn record(id: &str) -> RunRecord {
        RunRecord {
            comment_id: id.into(),
            strategy: "zero-shot".into(),
            endpoint_name: "mock".into(),
            phase_prompts: vec!["p".into()],
            phase_responses: vec!["Neutral".into()],
            predicted: Some(StanceLabel::Neutral),
            rule_id: Some("neutral".into()),
            scores: None,
            gold: StanceLabel::ProIsrael,
            attempts: 1,
            latency_ms: 0,
            rate_limited: false,
            exemplar_ids: vec![],
        }
    }

    #[test]
    fn round_trip_and_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(RECORDS_FILE);
        let mut w = RecordWriter::create(&path, &header()).unwrap();
        w.append(&record("a")).unwrap();
        drop(w);
        let full = read_records(&path).unwrap();
        assert_eq!(full.header, header());
        assert_eq!(full.records, vec![record("a")]);

        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"kind\":\"record\",\"comment_id\":\"b\"")
            .unwrap();
        drop(f);
        let torn = read_records(&path).unwrap();
        assert_eq!(torn.records.len(), 1);
        assert_eq!(torn.valid_len, full.valid_len);

        let mut w = RecordWriter::resume(&path, torn.valid_len).unwrap();
        w.append(&record("b")).unwrap();
        drop(w);
        let resumed = read_records(&path).unwrap();
        assert_eq!(resumed.records, vec![record("a"), record("b")]);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(RECORDS_FILE);
        let mut w = RecordWriter::create(&path, &header()).unwrap();
        w.file.write_all(b"garbage\n").unwrap();
        w.append(&record("a")).unwrap();
        drop(w);
        assert!(matches!(read_records(&path), Err(RunError::Records { .. })));
    }
}

//! Comment corpus: records, labels, keyword filtering, deduplication and
//! truncation.
//!
//! Submodules handle file formats ([`io`]), the stratified split ([`split`])
//! and descriptive statistics ([`stats`]).

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::annotation::{self, AnnotationError};

pub mod io;
pub mod split;
pub mod stats;

pub use io::{load_corpus, load_labeled, write_jsonl, RecordFormat};
pub use split::{split_dataset, split_sizes, DatasetSplit, SplitRatios, Subset};
pub use stats::{
    keyword_frequency, label_distribution, temporal_distribution, LabelCounts, YearMonth,
};

/// Maximum comment length, in Unicode scalar values, fed to any model.
pub const TRUNCATION_LIMIT: usize = 700;

/// Keywords quoted as filtering and annotation cues for the released corpus.
pub const DEFAULT_KEYWORDS: &str = include_str!("../../data/keywords.txt");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: duplicate comment id `{id}`")]
    DuplicateId { id: String, line: u64 },
    #[error("duplicate comment id `{0}` in input list")]
    DuplicateIdInList(String),
    #[error("invalid label code {0}; expected 0, 1 or 2")]
    InvalidLabelCode(i64),
    #[error("unknown label `{0}`; expected Neutral, Pro-Palestine or Pro-Israel")]
    UnknownLabel(String),
    #[error("unknown record format `{0}`; expected csv, tsv or jsonl")]
    UnknownFormat(String),
    #[error("keyword set is empty")]
    EmptyKeywordSet,
    #[error("keyword set contains an empty keyword")]
    EmptyKeyword,
    #[error("comment `{id}` has {count} annotator labels; expected 0 or 3")]
    AnnotatorCount { id: String, count: usize },
    #[error("comment `{id}`: gold label {gold} disagrees with annotator majority {majority}")]
    InconsistentGold {
        id: String,
        gold: StanceLabel,
        majority: StanceLabel,
    },
    #[error("comment `{id}`: {source}")]
    Annotation {
        id: String,
        #[source]
        source: AnnotationError,
    },
    #[error("split needs at least 3 comments, got {0}")]
    TooFewComments(usize),
    #[error("split ratios must be nonnegative and sum to 1, got {0:?}")]
    InvalidRatios((f64, f64, f64)),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

/// Three-way stance target with its fixed integer encoding
/// (Neutral = 0, Pro-Palestine = 1, Pro-Israel = 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StanceLabel {
    #[serde(rename = "Neutral")]
    Neutral,
    #[serde(rename = "Pro-Palestine")]
    ProPalestine,
    #[serde(rename = "Pro-Israel")]
    ProIsrael,
}

impl StanceLabel {
    /// All labels in code order.
    pub const ALL: [StanceLabel; 3] = [
        StanceLabel::Neutral,
        StanceLabel::ProPalestine,
        StanceLabel::ProIsrael,
    ];

    pub fn code(self) -> u8 {
        match self {
            StanceLabel::Neutral => 0,
            StanceLabel::ProPalestine => 1,
            StanceLabel::ProIsrael => 2,
        }
    }

    pub fn from_code(code: i64) -> Result<Self> {
        match code {
            0 => Ok(StanceLabel::Neutral),
            1 => Ok(StanceLabel::ProPalestine),
            2 => Ok(StanceLabel::ProIsrael),
            other => Err(CorpusError::InvalidLabelCode(other)),
        }
    }

    /// Canonical spelling used in data files and prompts.
    pub fn name(self) -> &'static str {
        match self {
            StanceLabel::Neutral => "Neutral",
            StanceLabel::ProPalestine => "Pro-Palestine",
            StanceLabel::ProIsrael => "Pro-Israel",
        }
    }

    pub fn index(self) -> usize {
        self.code() as usize
    }
}

impl fmt::Display for StanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StanceLabel {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self> {
        StanceLabel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| CorpusError::UnknownLabel(s.to_string()))
    }
}

pub fn encode_label(label: StanceLabel) -> u8 {
    label.code()
}

pub fn decode_label(code: i64) -> Result<StanceLabel> {
    StanceLabel::from_code(code)
}

/// Read access shared by raw and labeled comments.
pub trait Comment {
    fn id(&self) -> &str;
    fn text(&self) -> &str;
    fn created_utc(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawComment {
    pub id: String,
    pub created_utc: DateTime<Utc>,
    pub text: String,
}

impl Comment for RawComment {
    fn id(&self) -> &str {
        &self.id
    }
    fn text(&self) -> &str {
        &self.text
    }
    fn created_utc(&self) -> DateTime<Utc> {
        self.created_utc
    }
}

/// A corpus record after truncation, with its gold label once annotated.
///
/// When `annotator_labels` is non-empty it holds exactly three labels and
/// `gold` is their majority.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledComment {
    pub id: String,
    pub created_utc: DateTime<Utc>,
    pub text: String,
    pub truncated_text: String,
    pub gold: Option<StanceLabel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotator_labels: Vec<StanceLabel>,
}

impl LabeledComment {
    /// Builds a labeled comment, deriving `gold` from the annotators when it
    /// is not given and rejecting a `gold` that contradicts them.
    pub fn new(
        raw: RawComment,
        gold: Option<StanceLabel>,
        annotator_labels: Vec<StanceLabel>,
    ) -> Result<Self> {
        let gold = match annotator_labels.len() {
            0 => gold,
            3 => {
                let row = [
                    annotator_labels[0],
                    annotator_labels[1],
                    annotator_labels[2],
                ];
                let majority =
                    annotation::majority_label(&row).map_err(|source| CorpusError::Annotation {
                        id: raw.id.clone(),
                        source,
                    })?;
                match gold {
                    Some(g) if g != majority => {
                        return Err(CorpusError::InconsistentGold {
                            id: raw.id,
                            gold: g,
                            majority,
                        })
                    }
                    _ => Some(majority),
                }
            }
            count => {
                return Err(CorpusError::AnnotatorCount { id: raw.id, count });
            }
        };
        Ok(Self {
            truncated_text: truncate_text(&raw.text, TRUNCATION_LIMIT),
            id: raw.id,
            created_utc: raw.created_utc,
            text: raw.text,
            gold,
            annotator_labels,
        })
    }

    pub fn unlabeled(raw: RawComment) -> Self {
        Self {
            truncated_text: truncate_text(&raw.text, TRUNCATION_LIMIT),
            id: raw.id,
            created_utc: raw.created_utc,
            text: raw.text,
            gold: None,
            annotator_labels: Vec::new(),
        }
    }

    pub fn raw(&self) -> RawComment {
        RawComment {
            id: self.id.clone(),
            created_utc: self.created_utc,
            text: self.text.clone(),
        }
    }
}

impl Comment for LabeledComment {
    fn id(&self) -> &str {
        &self.id
    }
    fn text(&self) -> &str {
        &self.text
    }
    fn created_utc(&self) -> DateTime<Utc> {
        self.created_utc
    }
}

/// Substring keyword filter. Case-insensitive matching compares Unicode
/// lowercase forms of both sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordFilter {
    keywords: Vec<String>,
    folded: Vec<String>,
    case_sensitive: bool,
}

impl KeywordFilter {
    pub fn new<I, S>(keywords: I, case_sensitive: bool) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut keywords: Vec<String> = keywords.into_iter().map(Into::into).collect();
        if keywords.is_empty() {
            return Err(CorpusError::EmptyKeywordSet);
        }
        if keywords.iter().any(|k| k.is_empty()) {
            return Err(CorpusError::EmptyKeyword);
        }
        keywords.sort();
        keywords.dedup();
        let folded = keywords.iter().map(|k| k.to_lowercase()).collect();
        Ok(Self {
            keywords,
            folded,
            case_sensitive,
        })
    }

    /// Parses a keyword list: one keyword per line, blank lines and
    /// `#`-prefixed lines ignored, surrounding whitespace trimmed.
    pub fn parse(list: &str, case_sensitive: bool) -> Result<Self> {
        let keywords = list
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        Self::new(keywords, case_sensitive)
    }

    pub fn from_file(path: &Path, case_sensitive: bool) -> Result<Self> {
        let list = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&list, case_sensitive)
    }

    /// The built-in keyword list, matched case-insensitively.
    pub fn default_keywords() -> Self {
        Self::parse(DEFAULT_KEYWORDS, false).expect("built-in keyword list is valid")
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn case_sensitive(&self) -> bool {
        self.case_sensitive
    }

    /// Keywords occurring in `text`, in sorted keyword order.
    pub fn matching<'a>(&'a self, text: &str) -> impl Iterator<Item = &'a str> + 'a {
        let haystack = if self.case_sensitive {
            text.to_string()
        } else {
            text.to_lowercase()
        };
        let needles = if self.case_sensitive {
            &self.keywords
        } else {
            &self.folded
        };
        self.keywords
            .iter()
            .zip(needles)
            .filter(move |(_, needle)| haystack.contains(needle.as_str()))
            .map(|(k, _)| k.as_str())
    }

    pub fn matches(&self, text: &str) -> bool {
        self.matching(text).next().is_some()
    }
}

/// Keeps the comments containing at least one keyword, in input order.
pub fn filter_by_keywords<T: Comment + Clone>(comments: &[T], filter: &KeywordFilter) -> Vec<T> {
    comments
        .iter()
        .filter(|c| filter.matches(c.text()))
        .cloned()
        .collect()
}

/// Drops every comment whose NFC-normalized text equals that of an earlier
/// comment.
pub fn deduplicate<T: Comment + Clone>(comments: &[T]) -> Vec<T> {
    let mut seen = HashSet::with_capacity(comments.len());
    comments
        .iter()
        .filter(|c| seen.insert(c.text().nfc().collect::<String>()))
        .cloned()
        .collect()
}

/// First `limit` Unicode scalar values of `text`.
pub fn truncate_text(text: &str, limit: usize) -> String {
    match text.char_indices().nth(limit) {
        Some((end, _)) => text[..end].to_string(),
        None => text.to_string(),
    }
}

//! Extraction of stance labels and 1-5 scores from free-form completions.
//!
//! Label extraction scans the response left to right against an ordered
//! synonym table, case-insensitively. At each position the longest matching
//! pattern wins, and the earliest match in the response decides the label.
//! A response such as "not Pro-Israel but Pro-Palestine" therefore parses
//! as Pro-Israel; `rule_id` records which pattern fired so such cases can be
//! audited.

use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::StanceLabel;

pub const DEFAULT_SYNONYMS: &str = include_str!("../data/synonyms.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no stance label found in response")]
    NoLabel,
    #[error("no score found for {0}")]
    MissingCategory(StanceLabel),
    #[error("score {value} for {label} is outside 1..=5")]
    ScoreOutOfRange { label: StanceLabel, value: String },
    #[error("conflicting scores for {label}: {first} and {second}")]
    ConflictingScores {
        label: StanceLabel,
        first: u8,
        second: u8,
    },
    #[error("synonym table line {line}: {message}")]
    InvalidRule { line: usize, message: String },
    #[error("synonym table is empty")]
    EmptyTable,
    #[error("cannot read synonym table: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct SynonymRule {
    pattern: String,
    folded: String,
    label: StanceLabel,
}

/// Ordered pattern-to-label rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynonymTable {
    // sorted by descending pattern length, ties in file order
    rules: Vec<SynonymRule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Mention {
    start: usize,
    end: usize,
    rule: usize,
}

/// Byte length of the prefix of `haystack` that equals `pattern` (already
/// lowercased) after lowercasing, if any.
fn match_folded(haystack: &str, pattern: &str) -> Option<usize> {
    let mut pat = pattern.chars().peekable();
    for (i, c) in haystack.char_indices() {
        for lc in c.to_lowercase() {
            match pat.next() {
                Some(p) if p == lc => {}
                _ => return None,
            }
        }
        if pat.peek().is_none() {
            return Some(i + c.len_utf8());
        }
    }
    None
}

impl SynonymTable {
    /// Parses `pattern => label` lines; blank and `#` lines are ignored.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut rules = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let invalid = |message: String| ParseError::InvalidRule {
                line: idx + 1,
                message,
            };
            let (pattern, label) = line
                .rsplit_once("=>")
                .ok_or_else(|| invalid("expected `pattern => label`".into()))?;
            let pattern = pattern.trim();
            if pattern.is_empty() {
                return Err(invalid("empty pattern".into()));
            }
            let label: StanceLabel = label
                .trim()
                .parse()
                .map_err(|e: crate::corpus::CorpusError| invalid(e.to_string()))?;
            rules.push(SynonymRule {
                pattern: pattern.to_string(),
                folded: pattern.to_lowercase(),
                label,
            });
        }
        if rules.is_empty() {
            return Err(ParseError::EmptyTable);
        }
        rules.sort_by_key(|r| std::cmp::Reverse(r.folded.chars().count()));
        Ok(Self { rules })
    }

    pub fn from_file(path: &Path) -> Result<Self, ParseError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ParseError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The shipped table.
    pub fn builtin() -> &'static SynonymTable {
        static TABLE: OnceLock<SynonymTable> = OnceLock::new();
        TABLE
            .get_or_init(|| SynonymTable::parse(DEFAULT_SYNONYMS).expect("built-in table is valid"))
    }

    fn match_at(&self, text: &str, start: usize) -> Option<Mention> {
        self.rules.iter().enumerate().find_map(|(rule, r)| {
            match_folded(&text[start..], &r.folded).map(|len| Mention {
                start,
                end: start + len,
                rule,
            })
        })
    }

    /// Non-overlapping mentions, left to right.
    fn mentions(&self, text: &str) -> Vec<Mention> {
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < text.len() {
            if let Some(m) = self.match_at(text, pos) {
                pos = m.end;
                out.push(m);
            } else {
                pos += text[pos..].chars().next().map_or(1, char::len_utf8);
            }
        }
        out
    }

    pub fn parse_label(&self, response: &str) -> Result<ParsedPrediction, ParseError> {
        let first = response
            .char_indices()
            .find_map(|(i, _)| self.match_at(response, i))
            .ok_or(ParseError::NoLabel)?;
        let rule = &self.rules[first.rule];
        Ok(ParsedPrediction {
            label: rule.label,
            matched_span: response[first.start..first.end].to_string(),
            rule_id: rule.pattern.clone(),
        })
    }

    /// Reads one 1-5 score per category. Each category mention takes the
    /// first integer that follows it before the next mention; mentions with
    /// no integer in that window are ignored.
    pub fn parse_scores(&self, response: &str) -> Result<ScoreTriple, ParseError> {
        let mentions = self.mentions(response);
        let mut scores: [Option<u8>; 3] = [None; 3];
        for (k, m) in mentions.iter().enumerate() {
            let window_end = mentions.get(k + 1).map_or(response.len(), |n| n.start);
            let window = &response[m.end..window_end];
            let Some(digits) = first_integer(window) else {
                continue;
            };
            let label = self.rules[m.rule].label;
            let value = match digits.parse::<u8>() {
                Ok(v @ 1..=5) => v,
                _ => {
                    return Err(ParseError::ScoreOutOfRange {
                        label,
                        value: digits.to_string(),
                    })
                }
            };
            match scores[label.index()] {
                Some(prev) if prev != value => {
                    return Err(ParseError::ConflictingScores {
                        label,
                        first: prev,
                        second: value,
                    })
                }
                _ => scores[label.index()] = Some(value),
            }
        }
        let get = |l: StanceLabel| scores[l.index()].ok_or(ParseError::MissingCategory(l));
        Ok(ScoreTriple {
            pro_israel: get(StanceLabel::ProIsrael)?,
            pro_palestine: get(StanceLabel::ProPalestine)?,
            neutral: get(StanceLabel::Neutral)?,
        })
    }
}

fn first_integer(s: &str) -> Option<&str> {
    let start = s.find(|c: char| c.is_ascii_digit())?;
    let len = s[start..]
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(s.len() - start);
    Some(&s[start..start + len])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedPrediction {
    pub label: StanceLabel,
    /// The matched text, exactly as it appears in the response.
    pub matched_span: String,
    pub rule_id: String,
}

/// Phase-one alignment scores, each in `1..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub pro_israel: u8,
    pub pro_palestine: u8,
    pub neutral: u8,
}

impl ScoreTriple {
    pub fn new(pro_israel: u8, pro_palestine: u8, neutral: u8) -> Option<Self> {
        [pro_israel, pro_palestine, neutral]
            .iter()
            .all(|s| (1..=5).contains(s))
            .then_some(Self {
                pro_israel,
                pro_palestine,
                neutral,
            })
    }

    pub fn get(&self, label: StanceLabel) -> u8 {
        match label {
            StanceLabel::ProIsrael => self.pro_israel,
            StanceLabel::ProPalestine => self.pro_palestine,
            StanceLabel::Neutral => self.neutral,
        }
    }
}

impl fmt::Display for ScoreTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Pro-Israel: {}, Pro-Palestine: {}, Neutral: {}",
            self.pro_israel, self.pro_palestine, self.neutral
        )
    }
}

/// [`SynonymTable::parse_label`] with the built-in table.
pub fn parse_label(response: &str) -> Result<ParsedPrediction, ParseError> {
    SynonymTable::builtin().parse_label(response)
}

/// [`SynonymTable::parse_scores`] with the built-in table.
pub fn parse_scores(response: &str) -> Result<ScoreTriple, ParseError> {
    SynonymTable::builtin().parse_scores(response)
}

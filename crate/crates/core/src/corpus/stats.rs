//! Descriptive corpus statistics.

use std::collections::BTreeMap;
use std::fmt;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::{Comment, KeywordFilter, LabeledComment, StanceLabel};

/// Top-`k` keywords ranked by the number of comments containing them,
/// descending, ties broken lexicographically. Keywords that occur in no
/// comment are omitted.
pub fn keyword_frequency<T: Comment>(
    comments: &[T],
    filter: &KeywordFilter,
    k: usize,
) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for c in comments {
        for kw in filter.matching(c.text()) {
            *counts.entry(kw).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts
        .into_iter()
        .map(|(kw, n)| (kw.to_string(), n))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    fn next(self) -> Self {
        if self.month == 12 {
            YearMonth {
                year: self.year + 1,
                month: 1,
            }
        } else {
            YearMonth {
                year: self.year,
                month: self.month + 1,
            }
        }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// Comment counts per UTC calendar month. Every month between the first and
/// last comment is present, with zero where no comment falls.
pub fn temporal_distribution<T: Comment>(comments: &[T]) -> BTreeMap<YearMonth, usize> {
    let mut counts = BTreeMap::new();
    for c in comments {
        let ts = c.created_utc();
        let key = YearMonth {
            year: ts.year(),
            month: ts.month(),
        };
        *counts.entry(key).or_insert(0) += 1;
    }
    if let (Some(&first), Some(&last)) = (counts.keys().next(), counts.keys().next_back()) {
        let mut month = first;
        while month < last {
            counts.entry(month).or_insert(0);
            month = month.next();
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub neutral: usize,
    pub pro_palestine: usize,
    pub pro_israel: usize,
    pub unlabeled: usize,
}

impl LabelCounts {
    pub fn get(&self, label: StanceLabel) -> usize {
        match label {
            StanceLabel::Neutral => self.neutral,
            StanceLabel::ProPalestine => self.pro_palestine,
            StanceLabel::ProIsrael => self.pro_israel,
        }
    }

    pub fn total(&self) -> usize {
        self.neutral + self.pro_palestine + self.pro_israel + self.unlabeled
    }
}

pub fn label_distribution(comments: &[LabeledComment]) -> LabelCounts {
    let mut counts = LabelCounts::default();
    for c in comments {
        match c.gold {
            Some(StanceLabel::Neutral) => counts.neutral += 1,
            Some(StanceLabel::ProPalestine) => counts.pro_palestine += 1,
            Some(StanceLabel::ProIsrael) => counts.pro_israel += 1,
            None => counts.unlabeled += 1,
        }
    }
    counts
}

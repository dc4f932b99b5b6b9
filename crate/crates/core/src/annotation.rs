//! Annotator aggregation: majority-vote gold labels and Fleiss' kappa.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{LabeledComment, StanceLabel};

pub const ANNOTATORS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotationError {
    #[error("no majority: annotators assigned {0:?}")]
    NoMajority([StanceLabel; 3]),
    #[error("cannot compute agreement over zero items")]
    Empty,
    #[error("comment `{0}` has no annotator labels")]
    MissingAnnotations(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub comment_id: String,
    pub labels: [StanceLabel; 3],
}

impl AnnotationRow {
    pub fn from_comment(comment: &LabeledComment) -> Result<Self, AnnotationError> {
        match comment.annotator_labels.as_slice() {
            [a, b, c] => Ok(Self {
                comment_id: comment.id.clone(),
                labels: [*a, *b, *c],
            }),
            _ => Err(AnnotationError::MissingAnnotations(comment.id.clone())),
        }
    }

    fn counts(&self) -> [usize; 3] {
        category_counts(&self.labels)
    }
}

fn category_counts(labels: &[StanceLabel; 3]) -> [usize; 3] {
    let mut counts = [0; 3];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

/// The label chosen by at least two of the three annotators.
pub fn majority_label(labels: &[StanceLabel; 3]) -> Result<StanceLabel, AnnotationError> {
    let counts = category_counts(labels);
    StanceLabel::ALL
        .into_iter()
        .find(|l| counts[l.index()] >= 2)
        .ok_or(AnnotationError::NoMajority(*labels))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub kappa: f64,
    pub n_items: usize,
    pub n_annotators: usize,
    /// Share of all ratings per category, in label-code order.
    pub per_category_proportions: [f64; 3],
    pub mean_observed_agreement: f64,
    pub expected_agreement: f64,
    /// Set when every rating falls in one category and kappa is 0/0.
    pub degenerate: bool,
}

impl AgreementReport {
    /// One-line summary, e.g. `fleiss_kappa=0.9300 items=9969 annotators=3`.
    pub fn summary_line(&self) -> String {
        format!(
            "fleiss_kappa={:.4} items={} annotators={} proportions=[{}]{}",
            self.kappa,
            self.n_items,
            self.n_annotators,
            StanceLabel::ALL
                .iter()
                .map(|l| format!("{}={:.4}", l, self.per_category_proportions[l.index()]))
                .collect::<Vec<_>>()
                .join(", "),
            if self.degenerate {
                " (degenerate: single category)"
            } else {
                ""
            },
        )
    }
}

impl fmt::Display for AgreementReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.summary_line())
    }
}

/// Fleiss' kappa over the three stance categories with three raters per
/// item.
///
/// With `n` raters and `n_ij` raters putting item `i` in category `j`:
/// `P_i = (sum_j n_ij^2 - n) / (n (n - 1))`, `p_j` is category `j`'s share of
/// all ratings, and `kappa = (mean P_i - sum_j p_j^2) / (1 - sum_j p_j^2)`.
/// When all ratings share one category the ratio is 0/0; agreement is then
/// perfect and 1.0 is returned with `degenerate` set.
pub fn agreement_report(rows: &[AnnotationRow]) -> Result<AgreementReport, AnnotationError> {
    if rows.is_empty() {
        return Err(AnnotationError::Empty);
    }
    let n = ANNOTATORS as f64;
    let mut totals = [0usize; 3];
    let mut sum_p_i = 0.0;
    for row in rows {
        let counts = row.counts();
        let squares: usize = counts.iter().map(|c| c * c).sum();
        sum_p_i += (squares as f64 - n) / (n * (n - 1.0));
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    let n_ratings = (rows.len() * ANNOTATORS) as f64;
    let proportions = totals.map(|t| t as f64 / n_ratings);
    let p_bar = sum_p_i / rows.len() as f64;
    let p_e: f64 = proportions.iter().map(|p| p * p).sum();

    let degenerate = totals.iter().filter(|&&t| t > 0).count() == 1;
    let kappa = if degenerate {
        log::warn!("fleiss kappa is 0/0: all ratings share one category; reporting 1.0");
        1.0
    } else {
        (p_bar - p_e) / (1.0 - p_e)
    };
    Ok(AgreementReport {
        kappa,
        n_items: rows.len(),
        n_annotators: ANNOTATORS,
        per_category_proportions: proportions,
        mean_observed_agreement: p_bar,
        expected_agreement: p_e,
        degenerate,
    })
}

pub fn fleiss_kappa(rows: &[AnnotationRow]) -> Result<f64, AnnotationError> {
    agreement_report(rows).map(|r| r.kappa)
}

/// Annotation rows of every comment carrying annotator labels; comments
/// without them are rejected.
pub fn rows_from_comments(
    comments: &[LabeledComment],
) -> Result<Vec<AnnotationRow>, AnnotationError> {
    comments.iter().map(AnnotationRow::from_comment).collect()
}

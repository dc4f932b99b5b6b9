//! Classification metrics over the three stance classes.
//!
//! Unparsed predictions are tallied per gold class beside the 3x3 matrix.
//! They count as misses, lowering accuracy and the gold class's recall, and
//! add no false positive to any class.
//!
//! Two macro-F1 values are reported. [`macro_f1_of_macros`] is the harmonic
//! mean of macro precision and macro recall. [`macro_f1_per_class_avg`] is
//! the unweighted mean of the per-class F1 scores. Published tables that
//! quote "macro F1" are often computed the second way.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::StanceLabel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("cannot compute metrics over zero predictions")]
    Empty,
}

/// Gold rows by predicted columns, in label-code order, plus the unparsed
/// tally per gold class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: [[u64; 3]; 3],
    unparsed: [u64; 3],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; 3]; 3], unparsed: [u64; 3]) -> Result<Self, MetricsError> {
        let m = Self { counts, unparsed };
        if m.n() == 0 {
            return Err(MetricsError::Empty);
        }
        Ok(m)
    }

    pub fn count(&self, gold: StanceLabel, predicted: StanceLabel) -> u64 {
        self.counts[gold.index()][predicted.index()]
    }

    pub fn counts(&self) -> &[[u64; 3]; 3] {
        &self.counts
    }

    pub fn unparsed(&self, gold: StanceLabel) -> u64 {
        self.unparsed[gold.index()]
    }

    pub fn unparsed_total(&self) -> u64 {
        self.unparsed.iter().sum()
    }

    /// Every prediction, parsed or not.
    pub fn n(&self) -> u64 {
        self.counts.iter().flatten().sum::<u64>() + self.unparsed_total()
    }

    pub fn correct(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn true_positives(&self, c: StanceLabel) -> u64 {
        self.counts[c.index()][c.index()]
    }

    pub fn false_positives(&self, c: StanceLabel) -> u64 {
        let j = c.index();
        (0..3).filter(|&i| i != j).map(|i| self.counts[i][j]).sum()
    }

    pub fn false_negatives(&self, c: StanceLabel) -> u64 {
        let i = c.index();
        (0..3)
            .filter(|&j| j != i)
            .map(|j| self.counts[i][j])
            .sum::<u64>()
            + self.unparsed[i]
    }

    /// Gold-class totals, unparsed included.
    pub fn support(&self, c: StanceLabel) -> u64 {
        self.counts[c.index()].iter().sum::<u64>() + self.unparsed[c.index()]
    }
}

/// Tallies `(gold, predicted)` pairs; `None` marks an unparsed prediction.
pub fn confusion_matrix(
    pairs: &[(StanceLabel, Option<StanceLabel>)],
) -> Result<ConfusionMatrix, MetricsError> {
    let mut counts = [[0u64; 3]; 3];
    let mut unparsed = [0u64; 3];
    for (gold, predicted) in pairs {
        match predicted {
            Some(p) => counts[gold.index()][p.index()] += 1,
            None => unparsed[gold.index()] += 1,
        }
    }
    ConfusionMatrix::from_counts(counts, unparsed)
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Correct predictions over all predictions, unparsed included.
pub fn accuracy(m: &ConfusionMatrix) -> f64 {
    m.correct() as f64 / m.n() as f64
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: StanceLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Nothing was predicted as this class, so precision is 0/0 (reported as 0).
    pub precision_undefined: bool,
    /// The class never occurs in gold, so recall is 0/0 (reported as 0).
    pub recall_undefined: bool,
}

pub fn class_metrics(m: &ConfusionMatrix, c: StanceLabel) -> ClassMetrics {
    let tp = m.true_positives(c);
    let (precision, precision_undefined) = ratio(tp, tp + m.false_positives(c));
    let (recall, recall_undefined) = ratio(tp, tp + m.false_negatives(c));
    ClassMetrics {
        label: c,
        precision,
        recall,
        f1: f1_score(precision, recall),
        support: m.support(c),
        precision_undefined,
        recall_undefined,
    }
}

fn mean_over_classes(m: &ConfusionMatrix, f: impl Fn(&ClassMetrics) -> f64) -> f64 {
    StanceLabel::ALL
        .iter()
        .map(|&c| f(&class_metrics(m, c)))
        .sum::<f64>()
        / 3.0
}

pub fn macro_precision(m: &ConfusionMatrix) -> f64 {
    mean_over_classes(m, |c| c.precision)
}

pub fn macro_recall(m: &ConfusionMatrix) -> f64 {
    mean_over_classes(m, |c| c.recall)
}

/// `2 P R / (P + R)` over macro precision `P` and macro recall `R`.
pub fn macro_f1_of_macros(m: &ConfusionMatrix) -> f64 {
    f1_score(macro_precision(m), macro_recall(m))
}

/// Unweighted mean of the per-class F1 scores.
pub fn macro_f1_per_class_avg(m: &ConfusionMatrix) -> f64 {
    mean_over_classes(m, |c| c.f1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: u64,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1_of_macros: f64,
    pub macro_f1_per_class_avg: f64,
    pub per_class: [ClassMetrics; 3],
    pub unparsed_count: u64,
}

impl MetricsReport {
    pub fn from_matrix(m: &ConfusionMatrix) -> Self {
        Self {
            n: m.n(),
            accuracy: accuracy(m),
            macro_precision: macro_precision(m),
            macro_recall: macro_recall(m),
            macro_f1_of_macros: macro_f1_of_macros(m),
            macro_f1_per_class_avg: macro_f1_per_class_avg(m),
            per_class: StanceLabel::ALL.map(|c| class_metrics(m, c)),
            unparsed_count: m.unparsed_total(),
        }
    }

    /// Markdown summary row in the column order
    /// accuracy / macro precision / macro recall / macro F1, followed by the
    /// per-class-mean F1.
    pub fn summary_table(&self, model: &str) -> String {
        let mut out = String::new();
        out.push_str(
            "| Model | Test Accuracy | Test Precision (macro) | Test Recall (macro) \
             | Test F1 Score (macro) | Test F1 Score (macro, mean of class F1) |\n",
        );
        out.push_str("|---|---|---|---|---|---|\n");
        let _ = writeln!(
            out,
            "| {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} |",
            model,
            self.accuracy,
            self.macro_precision,
            self.macro_recall,
            self.macro_f1_of_macros,
            self.macro_f1_per_class_avg
        );
        out
    }

    /// Markdown class-wise table with rows Neutral, Pro-Israel,
    /// Pro-Palestine. Undefined (0/0) cells are marked with `*`.
    pub fn class_table(&self) -> String {
        let mut out = String::from("| Class | Precision | Recall | F1-Score | Support |\n");
        out.push_str("|---|---|---|---|---|\n");
        for label in [
            StanceLabel::Neutral,
            StanceLabel::ProIsrael,
            StanceLabel::ProPalestine,
        ] {
            let c = &self.per_class[label.index()];
            let mark = |undefined: bool| if undefined { "*" } else { "" };
            let _ = writeln!(
                out,
                "| {} | {:.4}{} | {:.4}{} | {:.4} | {} |",
                label,
                c.precision,
                mark(c.precision_undefined),
                c.recall,
                mark(c.recall_undefined),
                c.f1,
                c.support
            );
        }
        out
    }
}

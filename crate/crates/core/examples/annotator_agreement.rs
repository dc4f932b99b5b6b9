//! Majority-vote gold labels and Fleiss' kappa over three annotators.
//!
//! ```text
//! cargo run --example annotator_agreement [-- path/to/corpus.csv]
//! ```

use std::path::PathBuf;

use stancebench::annotation::{agreement_report, majority_label, rows_from_comments};
use stancebench::corpus::{load_labeled, RecordFormat};

fn main() -> anyhow::Result<()> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/comments12.jsonl").into()
        });
    let format = RecordFormat::from_path(&path).unwrap_or(RecordFormat::Jsonl);
    let comments = load_labeled(&path, format)?;
    let rows = rows_from_comments(&comments)?;

    for row in &rows {
        let names: Vec<_> = row.labels.iter().map(|l| l.name()).collect();
        let majority = majority_label(&row.labels).map(|l| l.name().to_string());
        println!(
            "{:<6} {:<40} -> {}",
            row.comment_id,
            names.join(" / "),
            majority.unwrap_or_else(|e| format!("({e})"))
        );
    }
    let report = agreement_report(&rows)?;
    println!("\n{}", report.summary_line());
    println!(
        "observed agreement {:.4}, chance agreement {:.4}",
        report.mean_observed_agreement, report.expected_agreement
    );
    Ok(())
}

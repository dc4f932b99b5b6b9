//! Build a confusion matrix from (gold, predicted) pairs and print the
//! summary and class-wise tables, including both macro-F1 definitions.
//!
//! ```text
//! cargo run --example metrics_tables
//! ```

use stancebench::metrics::{confusion_matrix, f1_score, MetricsReport};
use stancebench::StanceLabel::{self, *};

fn main() -> anyhow::Result<()> {
    let pairs: Vec<(StanceLabel, Option<StanceLabel>)> = vec![
        (Neutral, Some(Neutral)),
        (Neutral, Some(ProIsrael)),
        (Neutral, None),
        (ProIsrael, Some(ProIsrael)),
        (ProIsrael, Some(ProIsrael)),
        (ProIsrael, Some(ProPalestine)),
        (ProPalestine, Some(ProPalestine)),
        (ProPalestine, Some(Neutral)),
    ];
    let matrix = confusion_matrix(&pairs)?;
    let report = MetricsReport::from_matrix(&matrix);
    println!("{}", report.summary_table("example"));
    println!("{}", report.class_table());
    println!("unparsed: {}", matrix.unparsed_total());
    println!(
        "F1 from precision 0.80 and recall 0.60: {:.4}",
        f1_score(0.8, 0.6)
    );
    Ok(())
}

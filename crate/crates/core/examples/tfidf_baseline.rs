//! Train the TF-IDF softmax baseline on the train split and score it on the
//! test split, without any model endpoint.
//!
//! ```text
//! cargo run --example tfidf_baseline
//! ```

use stancebench::corpus::{load_labeled, split_dataset, RecordFormat, SplitRatios, Subset};
use stancebench::metrics::{confusion_matrix, MetricsReport};
use stancebench::vectorize::{BaselineModel, TrainConfig, VectorizerKind};

fn main() -> anyhow::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/comments12.jsonl");
    let comments = load_labeled(path.as_ref(), RecordFormat::Jsonl)?;
    let split = split_dataset(&comments, SplitRatios::default(), 0)?;

    let train: Vec<_> = split
        .subset(Subset::Train)
        .into_iter()
        .filter_map(|c| Some((c.text.clone(), c.gold?)))
        .collect();
    let model = BaselineModel::train(&train, VectorizerKind::Tfidf, 1, &TrainConfig::default())?;
    println!(
        "vocabulary: {} terms from {} training comments",
        model.n_features,
        train.len()
    );

    let mut pairs = Vec::new();
    for c in split.subset(Subset::Test) {
        let predicted = model.predict(&c.text)?;
        println!(
            "{:<4} gold={:<14} predicted={predicted}",
            c.id,
            c.gold.unwrap().name()
        );
        pairs.push((c.gold.unwrap(), Some(predicted)));
    }
    let report = MetricsReport::from_matrix(&confusion_matrix(&pairs)?);
    println!("\n{}", report.summary_table("tfidf-softmax"));
    Ok(())
}

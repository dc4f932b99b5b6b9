//! Ingest a corpus, filter and deduplicate it, print statistics and the
//! stratified split.
//!
//! ```text
//! cargo run --example corpus_pipeline [-- path/to/corpus.jsonl]
//! ```

use std::path::PathBuf;

use stancebench::corpus::{
    deduplicate, filter_by_keywords, keyword_frequency, label_distribution, load_labeled,
    split_dataset, temporal_distribution, KeywordFilter, RecordFormat, SplitRatios,
};

fn main() -> anyhow::Result<()> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/comments12.jsonl").into()
        });
    let format = RecordFormat::from_path(&path).unwrap_or(RecordFormat::Jsonl);
    let loaded = load_labeled(&path, format)?;

    let filter = KeywordFilter::default_keywords();
    let kept = deduplicate(&filter_by_keywords(&loaded, &filter));
    println!(
        "{} loaded, {} after keyword filter and dedup",
        loaded.len(),
        kept.len()
    );

    println!("\ntop keywords:");
    for (kw, n) in keyword_frequency(&kept, &filter, 5) {
        println!("  {kw:<20} {n}");
    }
    println!("\nmonthly volume:");
    for (month, n) in temporal_distribution(&kept) {
        println!("  {month} {n}");
    }
    let labels = label_distribution(&kept);
    println!(
        "\nlabels: Neutral={} Pro-Palestine={} Pro-Israel={}",
        labels.neutral, labels.pro_palestine, labels.pro_israel
    );

    let split = split_dataset(&kept, SplitRatios::default(), 0)?;
    let (train, test, validation) = split.sizes();
    println!("split (seed 0): train={train} test={test} validation={validation}");
    Ok(())
}

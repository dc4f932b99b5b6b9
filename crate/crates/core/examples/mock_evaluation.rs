//! Run a full evaluation against the rule-based mock model and print the
//! Markdown report. Output files land in a temporary directory unless one
//! is given.
//!
//! ```text
//! cargo run --example mock_evaluation [-- out/dir]
//! ```

use std::path::PathBuf;

use stancebench::corpus::Subset;
use stancebench::prompt::Strategy;
use stancebench::runner::{run_evaluation, EndpointSection, RunConfig};

fn main() -> anyhow::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("stancebench-mock-evaluation"));
    let mut config = RunConfig::new(
        concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/comments12.jsonl"),
        Strategy::ZeroShot,
        EndpointSection::mock(),
        &out,
    );
    config.corpus.subset = Subset::All;
    config.fresh = true;

    let report = run_evaluation(&config)?;
    println!("{}", report.to_markdown());
    println!("files written to {}", out.display());
    Ok(())
}

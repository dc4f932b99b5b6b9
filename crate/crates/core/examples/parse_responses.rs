//! Extract labels and alignment scores from free-form completions.
//!
//! ```text
//! cargo run --example parse_responses
//! ```

use stancebench::parse::{parse_label, parse_scores};

fn main() {
    let responses = [
        "Pro-Israel",
        "  neutral.",
        "Stance: pro palestinian",
        "I think this comment is Pro-Palestine because it mentions the occupation.",
        "The comment does not say.",
    ];
    for r in responses {
        match parse_label(r) {
            Ok(p) => println!(
                "{r:?} -> {} (matched {:?}, rule {})",
                p.label, p.matched_span, p.rule_id
            ),
            Err(e) => println!("{r:?} -> unparsed: {e}"),
        }
    }

    let scored = "Pro-Israel: 2\nPro-Palestine: 5\nNeutral: 1";
    match parse_scores(scored) {
        Ok(s) => println!("\nscores: {s:?}"),
        Err(e) => println!("\nscores unparsed: {e}"),
    }
}

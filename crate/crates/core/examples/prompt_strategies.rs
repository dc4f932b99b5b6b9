//! Render the prompts of every catalog strategy for one comment.
//!
//! ```text
//! cargo run --example prompt_strategies [-- five-shot]
//! ```

use stancebench::corpus::{LabeledComment, RawComment, StanceLabel};
use stancebench::prompt::{build_plan, render_phase, Exemplar, Strategy};

fn main() -> anyhow::Result<()> {
    let only: Option<Strategy> = std::env::args().nth(1).map(|s| s.parse()).transpose()?;
    let raw = RawComment {
        id: "demo".into(),
        created_utc: chrono::Utc::now(),
        text: "Another week of talks and still no ceasefire.".into(),
    };
    let comment = LabeledComment::new(raw, None, vec![])?;
    let exemplars: Vec<Exemplar> = [
        (
            "e1",
            "Free Palestine, end the occupation.",
            StanceLabel::ProPalestine,
        ),
        (
            "e2",
            "Israel has every right to defend itself.",
            StanceLabel::ProIsrael,
        ),
        (
            "e3",
            "What time is the vote in the UN today?",
            StanceLabel::Neutral,
        ),
        ("e4", "Lift the siege on Gaza.", StanceLabel::ProPalestine),
        ("e5", "Bring the hostages home.", StanceLabel::ProIsrael),
    ]
    .into_iter()
    .map(|(id, text, label)| Exemplar {
        id: id.into(),
        text: text.into(),
        label,
    })
    .collect();

    for strategy in Strategy::CATALOG {
        if only.is_some_and(|s| s != strategy) {
            continue;
        }
        let plan = build_plan(strategy, &comment, &exemplars)?;
        for (i, phase) in plan.phases.iter().enumerate() {
            // second phases are shown with a placeholder first-phase answer
            let prior = phase.consumes_prior().then_some("<phase 1 response>");
            println!("===== {strategy} phase {} ({})", i + 1, phase.template_id);
            println!("{}", render_phase(phase, prior)?);
        }
    }
    Ok(())
}

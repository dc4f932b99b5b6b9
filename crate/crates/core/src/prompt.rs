//! Prompting strategies compiled into one- or two-phase plans.
//!
//! Templates are plain text with `{slot}` placeholders (slot names are
//! lowercase ASCII letters, digits and underscores; any other brace is
//! literal). Substituted values are never rescanned, so comment text that
//! happens to contain `{comment}` is inserted verbatim.
//!
//! | strategy                    | phases | template(s)                                     |
//! |-----------------------------|--------|-------------------------------------------------|
//! | `zero-shot`                 | 1      | `zero_shot`                                     |
//! | `one-shot`                  | 1      | `one_shot`                                      |
//! | `three-shot`, `five-shot`   | 1      | `few_shot`                                      |
//! | `re2-zero-shot`             | 1      | `re2_zero_shot`                                 |
//! | `re2-one-shot`              | 1      | `re2_one_shot`                                  |
//! | `meta-self-critique`        | 2      | `meta_critique_initial`, `meta_critique_refine` |
//! | `context-extraction`        | 1      | `context_extraction`                            |
//! | `scoring-reflective-reread` | 2      | `scoring`, `reflective_reread`                  |
//!
//! The re-read variants stay single-phase: the re-read directive is part of
//! the one instruction. The second phase of the two-phase strategies
//! receives the first phase's raw response in a dedicated slot.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{LabeledComment, StanceLabel};
use crate::shuffle;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("few-shot prompting supports 3 or 5 examples, not {0}")]
    InvalidShotCount(usize),
    #[error("{strategy} needs {required} exemplar(s), got {given}")]
    InsufficientExemplars {
        strategy: Strategy,
        required: usize,
        given: usize,
    },
    #[error("exemplar `{0}` belongs to the evaluation subset")]
    ExemplarLeak(String),
    #[error("template `{template}` has no value for slot `{slot}`")]
    UnfilledSlot { template: String, slot: String },
    #[error("template `{0}` consumes the previous response, but none was given")]
    MissingPriorResponse(String),
    #[error("template `{0}` does not take a previous response")]
    UnexpectedPriorResponse(String),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("need {needed} labeled training comments for exemplars, have {available}")]
    InsufficientTrain { needed: usize, available: usize },
    #[error("training data has no {0} comment to use as an exemplar")]
    MissingClass(StanceLabel),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

pub type Result<T, E = PromptError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    ZeroShot,
    OneShot,
    /// Three or five exemplars.
    FewShot(u8),
    Re2ZeroShot,
    Re2OneShot,
    MetaSelfCritique,
    ContextExtraction,
    ScoringReflectiveReread,
}

impl Strategy {
    /// Every strategy, in catalog order.
    pub const CATALOG: [Strategy; 9] = [
        Strategy::ZeroShot,
        Strategy::OneShot,
        Strategy::FewShot(3),
        Strategy::FewShot(5),
        Strategy::Re2ZeroShot,
        Strategy::Re2OneShot,
        Strategy::MetaSelfCritique,
        Strategy::ContextExtraction,
        Strategy::ScoringReflectiveReread,
    ];

    pub fn few_shot(k: usize) -> Result<Self> {
        match k {
            3 | 5 => Ok(Strategy::FewShot(k as u8)),
            other => Err(PromptError::InvalidShotCount(other)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::ZeroShot => "zero-shot",
            Strategy::OneShot => "one-shot",
            Strategy::FewShot(3) => "three-shot",
            Strategy::FewShot(_) => "five-shot",
            Strategy::Re2ZeroShot => "re2-zero-shot",
            Strategy::Re2OneShot => "re2-one-shot",
            Strategy::MetaSelfCritique => "meta-self-critique",
            Strategy::ContextExtraction => "context-extraction",
            Strategy::ScoringReflectiveReread => "scoring-reflective-reread",
        }
    }

    pub fn required_exemplars(self) -> usize {
        match self {
            Strategy::OneShot | Strategy::Re2OneShot => 1,
            Strategy::FewShot(k) => k as usize,
            _ => 0,
        }
    }

    pub fn phase_count(self) -> usize {
        self.template_ids().len()
    }

    /// Template ids of each phase, in order.
    pub fn template_ids(self) -> &'static [&'static str] {
        match self {
            Strategy::ZeroShot => &["zero_shot"],
            Strategy::OneShot => &["one_shot"],
            Strategy::FewShot(_) => &["few_shot"],
            Strategy::Re2ZeroShot => &["re2_zero_shot"],
            Strategy::Re2OneShot => &["re2_one_shot"],
            Strategy::MetaSelfCritique => &["meta_critique_initial", "meta_critique_refine"],
            Strategy::ContextExtraction => &["context_extraction"],
            Strategy::ScoringReflectiveReread => &["scoring", "reflective_reread"],
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::CATALOG
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| PromptError::UnknownStrategy(s.to_string()))
    }
}

impl TryFrom<String> for Strategy {
    type Error = PromptError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.name().to_string()
    }
}

/// Prior-response slot for templates whose phase consumes an earlier
/// response.
fn prior_slot(template_id: &str) -> Option<&'static str> {
    match template_id {
        "meta_critique_refine" => Some("initial_classification"),
        "reflective_reread" => Some("scores"),
        _ => None,
    }
}

const BUILTIN_TEMPLATES: [(&str, &str); 10] = [
    ("zero_shot", include_str!("../templates/zero_shot.txt")),
    ("one_shot", include_str!("../templates/one_shot.txt")),
    ("few_shot", include_str!("../templates/few_shot.txt")),
    (
        "re2_zero_shot",
        include_str!("../templates/re2_zero_shot.txt"),
    ),
    (
        "re2_one_shot",
        include_str!("../templates/re2_one_shot.txt"),
    ),
    (
        "meta_critique_initial",
        include_str!("../templates/meta_critique_initial.txt"),
    ),
    (
        "meta_critique_refine",
        include_str!("../templates/meta_critique_refine.txt"),
    ),
    (
        "context_extraction",
        include_str!("../templates/context_extraction.txt"),
    ),
    ("scoring", include_str!("../templates/scoring.txt")),
    (
        "reflective_reread",
        include_str!("../templates/reflective_reread.txt"),
    ),
];

/// Template texts keyed by template id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<String, String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateSet {
    pub fn builtin() -> Self {
        Self {
            templates: BUILTIN_TEMPLATES
                .iter()
                .map(|(id, text)| (id.to_string(), text.to_string()))
                .collect(),
        }
    }

    /// Built-in templates, replaced by `<dir>/<template_id>.txt` wherever
    /// such a file exists.
    pub fn with_overrides(dir: &Path) -> Result<Self> {
        let mut set = Self::builtin();
        for (id, text) in set.templates.iter_mut() {
            let path = dir.join(format!("{id}.txt"));
            if path.is_file() {
                *text = std::fs::read_to_string(&path).map_err(|e| PromptError::Io {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
            }
        }
        Ok(set)
    }

    pub fn get(&self, id: &str) -> Result<&str> {
        self.templates
            .get(id)
            .map(String::as_str)
            .ok_or_else(|| PromptError::UnknownTemplate(id.to_string()))
    }

    /// SHA-256 of a template's text, hex encoded.
    pub fn hash(&self, id: &str) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.get(id)?.as_bytes())))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }
}

/// A labeled demonstration drawn from the training split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub id: String,
    pub text: String,
    pub label: StanceLabel,
}

impl Exemplar {
    pub fn from_comment(c: &LabeledComment) -> Option<Self> {
        Some(Self {
            id: c.id.clone(),
            text: c.truncated_text.clone(),
            label: c.gold?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptPhase {
    pub template_id: String,
    template: String,
    pub slots: BTreeMap<String, String>,
    /// Slot that receives the previous phase's response, if any.
    pub prior_slot: Option<String>,
}

impl PromptPhase {
    pub fn consumes_prior(&self) -> bool {
        self.prior_slot.is_some()
    }

    pub fn template(&self) -> &str {
        &self.template
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptPlan {
    pub strategy: Strategy,
    pub comment_id: String,
    pub phases: Vec<PromptPhase>,
    pub exemplars: Vec<Exemplar>,
}

/// Renders exemplars as `Comment:` / `Stance:` pairs separated by blank
/// lines, numbered when there is more than one.
pub fn render_examples(exemplars: &[Exemplar]) -> String {
    let numbered = exemplars.len() > 1;
    exemplars
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let head = if numbered {
                format!("Example {}:\n", i + 1)
            } else {
                String::new()
            };
            format!("{head}Comment: {}\nStance: {}", e.text, e.label)
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Compiles plans from a template set, refusing exemplars whose id is in the
/// forbidden (evaluation) set.
#[derive(Debug, Clone, Default)]
pub struct PromptCompiler {
    templates: TemplateSet,
    forbidden_ids: HashSet<String>,
}

impl PromptCompiler {
    pub fn new(templates: TemplateSet) -> Self {
        Self {
            templates,
            forbidden_ids: HashSet::new(),
        }
    }

    pub fn forbid_exemplars<I, S>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.forbidden_ids.extend(ids.into_iter().map(Into::into));
        self
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn build_plan(
        &self,
        strategy: Strategy,
        comment: &LabeledComment,
        exemplars: &[Exemplar],
    ) -> Result<PromptPlan> {
        let required = strategy.required_exemplars();
        if exemplars.len() < required {
            return Err(PromptError::InsufficientExemplars {
                strategy,
                required,
                given: exemplars.len(),
            });
        }
        let used = &exemplars[..required];
        if let Some(e) = used
            .iter()
            .find(|e| e.id == comment.id || self.forbidden_ids.contains(&e.id))
        {
            return Err(PromptError::ExemplarLeak(e.id.clone()));
        }

        let phases = strategy
            .template_ids()
            .iter()
            .map(|&id| {
                let mut slots = BTreeMap::new();
                slots.insert("comment".to_string(), comment.truncated_text.clone());
                if required > 0 {
                    slots.insert("examples".to_string(), render_examples(used));
                }
                Ok(PromptPhase {
                    template_id: id.to_string(),
                    template: self.templates.get(id)?.to_string(),
                    slots,
                    prior_slot: prior_slot(id).map(str::to_string),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(PromptPlan {
            strategy,
            comment_id: comment.id.clone(),
            phases,
            exemplars: used.to_vec(),
        })
    }
}

/// Builds a plan with the built-in templates.
pub fn build_plan(
    strategy: Strategy,
    comment: &LabeledComment,
    exemplars: &[Exemplar],
) -> Result<PromptPlan> {
    PromptCompiler::default().build_plan(strategy, comment, exemplars)
}

fn is_slot_char(b: u8) -> bool {
    b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_'
}

/// Fills a phase's template. `prior_response` must be given exactly when
/// the phase consumes one.
pub fn render_phase(phase: &PromptPhase, prior_response: Option<&str>) -> Result<String> {
    let prior = match (&phase.prior_slot, prior_response) {
        (Some(slot), Some(resp)) => Some((slot.as_str(), resp)),
        (Some(_), None) => {
            return Err(PromptError::MissingPriorResponse(phase.template_id.clone()))
        }
        (None, Some(_)) => {
            return Err(PromptError::UnexpectedPriorResponse(
                phase.template_id.clone(),
            ))
        }
        (None, None) => None,
    };
    let lookup = |name: &str| -> Option<&str> {
        match prior {
            Some((slot, resp)) if slot == name => Some(resp),
            _ => phase.slots.get(name).map(String::as_str),
        }
    };

    let template = phase.template.as_str();
    let bytes = template.as_bytes();
    let mut out = String::with_capacity(template.len() + 1024);
    let mut i = 0;
    let mut copied = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let start = i + 1;
            let mut end = start;
            while end < bytes.len() && is_slot_char(bytes[end]) {
                end += 1;
            }
            if end > start && end < bytes.len() && bytes[end] == b'}' {
                let name = &template[start..end];
                let value = lookup(name).ok_or_else(|| PromptError::UnfilledSlot {
                    template: phase.template_id.clone(),
                    slot: name.to_string(),
                })?;
                out.push_str(&template[copied..i]);
                out.push_str(value);
                i = end + 1;
                copied = i;
                continue;
            }
        }
        i += 1;
    }
    out.push_str(&template[copied..]);
    Ok(out)
}

/// Deterministically picks `k` exemplars from labeled training comments.
///
/// For `k >= 3` one comment of each class is taken first and the rest are
/// drawn from the remaining pool, so every class is represented. The final
/// order is shuffled so labels do not appear in code order.
pub fn select_exemplars(train: &[LabeledComment], k: usize, seed: u64) -> Result<Vec<Exemplar>> {
    let labeled: Vec<Exemplar> = train.iter().filter_map(Exemplar::from_comment).collect();
    if labeled.len() < k {
        return Err(PromptError::InsufficientTrain {
            needed: k,
            available: labeled.len(),
        });
    }
    let mut rng = shuffle::rng(seed);
    let mut chosen = Vec::with_capacity(k);
    let mut pool;
    if k >= 3 {
        let mut by_class: Vec<Vec<Exemplar>> = vec![Vec::new(); 3];
        for e in labeled {
            by_class[e.label.index()].push(e);
        }
        pool = Vec::new();
        for (label, mut members) in StanceLabel::ALL.into_iter().zip(by_class) {
            if members.is_empty() {
                return Err(PromptError::MissingClass(label));
            }
            shuffle::shuffle(&mut members, &mut rng);
            let mut members = members.into_iter();
            chosen.extend(members.next());
            pool.extend(members);
        }
    } else {
        pool = labeled;
    }
    shuffle::shuffle(&mut pool, &mut rng);
    let missing = k - chosen.len();
    chosen.extend(pool.into_iter().take(missing));
    shuffle::shuffle(&mut chosen, &mut rng);
    Ok(chosen)
}

/// An exemplar that duplicates a comment under evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageFinding {
    pub plan_comment_id: String,
    pub exemplar_id: String,
    pub evaluation_id: String,
}

/// Flags every exemplar whose id, or NFC-normalized text, matches a comment
/// in the evaluation subset.
pub fn audit_leakage(plans: &[PromptPlan], evaluation: &[&LabeledComment]) -> Vec<LeakageFinding> {
    let by_id: BTreeMap<&str, &str> = evaluation
        .iter()
        .map(|c| (c.id.as_str(), c.id.as_str()))
        .collect();
    let by_text: BTreeMap<String, &str> = evaluation
        .iter()
        .map(|c| (c.truncated_text.nfc().collect::<String>(), c.id.as_str()))
        .collect();
    let mut findings = Vec::new();
    for plan in plans {
        for e in &plan.exemplars {
            let hit = by_id
                .get(e.id.as_str())
                .copied()
                .or_else(|| by_text.get(&e.text.nfc().collect::<String>()).copied());
            if let Some(eval_id) = hit {
                findings.push(LeakageFinding {
                    plan_comment_id: plan.comment_id.clone(),
                    exemplar_id: e.id.clone(),
                    evaluation_id: eval_id.to_string(),
                });
            }
        }
    }
    findings
}

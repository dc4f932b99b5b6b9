use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CompletionModel, CompletionResult, LlmError};

pub const DEFAULT_MOCK_RULES: &str = include_str!("../../data/mock_rules.toml");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRule {
    pub pattern: String,
    pub response: String,
}

/// Ordered substring rules plus a fallback response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRules {
    #[serde(default)]
    pub rules: Vec<MockRule>,
    #[serde(default = "default_response")]
    pub default: String,
}

fn default_response() -> String {
    "Neutral".to_string()
}

impl Default for MockRules {
    fn default() -> Self {
        Self::from_toml(DEFAULT_MOCK_RULES).expect("built-in mock rules parse")
    }
}

impl MockRules {
    pub fn new(rules: Vec<MockRule>, default: impl Into<String>) -> Self {
        Self {
            rules,
            default: default.into(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, LlmError> {
        let rules: Self = toml::from_str(text)
            .map_err(|e| LlmError::InvalidConfig(format!("mock rules: {e}")))?;
        if let Some(r) = rules.rules.iter().find(|r| r.pattern.is_empty()) {
            return Err(LlmError::InvalidConfig(format!(
                "mock rules: empty pattern for response `{}`",
                r.response
            )));
        }
        Ok(rules)
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The response of the first rule whose pattern occurs in `prompt`,
    /// ignoring case.
    pub fn respond(&self, prompt: &str) -> &str {
        let haystack = prompt.to_lowercase();
        self.rules
            .iter()
            .find(|r| haystack.contains(&r.pattern.to_lowercase()))
            .map_or(&self.default, |r| &r.response)
    }
}

/// Answers a prompt from `rules`: one attempt, zero latency.
pub fn mock_complete(rules: &MockRules, prompt: &str) -> CompletionResult {
    CompletionResult {
        text: rules.respond(prompt).to_string(),
        latency: Duration::ZERO,
        attempts: 1,
        endpoint_name: "mock".to_string(),
        retried: Vec::new(),
        backoff: Vec::new(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct MockModel {
    rules: MockRules,
}

impl MockModel {
    pub fn new(rules: MockRules) -> Self {
        Self { rules }
    }

    pub fn rules(&self) -> &MockRules {
        &self.rules
    }
}

impl CompletionModel for MockModel {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, prompt: &str) -> Result<CompletionResult, LlmError> {
        Ok(mock_complete(&self.rules, prompt))
    }
}

//! Completion endpoints.
//!
//! [`HttpClient`] talks to a hosted text-generation endpoint with retry,
//! backoff and throttling. [`MockModel`] answers from an ordered table of
//! substring rules and never touches the network. Both implement
//! [`CompletionModel`], which is what the runner consumes.

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod http;
mod mock;
mod retry;

pub use http::{EndpointConfig, EndpointFlavor, HttpClient};
pub use mock::{mock_complete, MockModel, MockRule, MockRules, DEFAULT_MOCK_RULES};
pub use retry::RetryPolicy;

/// Failure classes a [`RetryPolicy`] can choose to retry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorClass {
    Timeout,
    RateLimited,
    Server,
    Transport,
    Auth,
}

impl ErrorClass {
    pub const RETRYABLE: [ErrorClass; 4] = [
        ErrorClass::Timeout,
        ErrorClass::RateLimited,
        ErrorClass::Server,
        ErrorClass::Transport,
    ];
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorClass::Timeout => "timeout",
            ErrorClass::RateLimited => "rate-limited",
            ErrorClass::Server => "server",
            ErrorClass::Transport => "transport",
            ErrorClass::Auth => "auth",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("{endpoint}: timed out after {attempts} attempt(s)")]
    Timeout { endpoint: String, attempts: u32 },
    #[error("{endpoint}: rate limited after {attempts} attempt(s)")]
    RateLimited { endpoint: String, attempts: u32 },
    #[error("{endpoint}: server error (HTTP {status}) after {attempts} attempt(s)")]
    Server {
        endpoint: String,
        status: u16,
        attempts: u32,
    },
    #[error("{endpoint}: transport error after {attempts} attempt(s): {message}")]
    Transport {
        endpoint: String,
        message: String,
        attempts: u32,
    },
    #[error("{endpoint}: authentication failed (HTTP {status})")]
    Auth { endpoint: String, status: u16 },
    #[error("prompt has {chars} characters, endpoint limit is {limit}; nothing was sent")]
    Oversize { chars: usize, limit: usize },
    #[error("auth token environment variable `{0}` is not set")]
    MissingToken(String),
    #[error("{endpoint}: unusable response: {message}")]
    BadResponse { endpoint: String, message: String },
    #[error("invalid endpoint configuration: {0}")]
    InvalidConfig(String),
}

impl LlmError {
    pub fn class(&self) -> Option<ErrorClass> {
        match self {
            LlmError::Timeout { .. } => Some(ErrorClass::Timeout),
            LlmError::RateLimited { .. } => Some(ErrorClass::RateLimited),
            LlmError::Server { .. } => Some(ErrorClass::Server),
            LlmError::Transport { .. } => Some(ErrorClass::Transport),
            LlmError::Auth { .. } => Some(ErrorClass::Auth),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub text: String,
    pub latency: Duration,
    pub attempts: u32,
    pub endpoint_name: String,
    /// Class of each failed attempt that was retried, in order.
    pub retried: Vec<ErrorClass>,
    /// Backoff slept after each retried failure.
    pub backoff: Vec<Duration>,
}

impl CompletionResult {
    pub fn rate_limited(&self) -> bool {
        self.retried.contains(&ErrorClass::RateLimited)
    }
}

pub trait CompletionModel: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<CompletionResult, LlmError>;
}

/// An auth token. Its `Debug` and `Display` output is redacted.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(value: impl Into<String>) -> Self {
        Self(value.into())
    }

    pub(crate) fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(<redacted>)")
    }
}

impl fmt::Display for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<redacted>")
    }
}

use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ErrorClass, LlmError};

/// Exponential backoff: the delay after failed attempt `k` (1-based) is
/// `base_backoff * multiplier^(k-1)`, capped at `max_backoff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_backoff_ms: u64,
    pub backoff_multiplier: f64,
    pub max_backoff_ms: u64,
    pub retry_on: BTreeSet<ErrorClass>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_backoff_ms: 1_000,
            backoff_multiplier: 2.0,
            max_backoff_ms: 30_000,
            retry_on: ErrorClass::RETRYABLE.into_iter().collect(),
        }
    }
}

impl RetryPolicy {
    pub fn no_retry() -> Self {
        Self {
            max_attempts: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.max_attempts == 0 {
            return Err(LlmError::InvalidConfig(
                "retry.max_attempts must be >= 1".into(),
            ));
        }
        if !self.backoff_multiplier.is_finite() || self.backoff_multiplier < 1.0 {
            return Err(LlmError::InvalidConfig(
                "retry.backoff_multiplier must be a finite number >= 1".into(),
            ));
        }
        if self.max_backoff_ms < self.base_backoff_ms {
            return Err(LlmError::InvalidConfig(
                "retry.max_backoff_ms must be >= retry.base_backoff_ms".into(),
            ));
        }
        Ok(())
    }

    pub fn max_backoff(&self) -> Duration {
        Duration::from_millis(self.max_backoff_ms)
    }

    /// Delay before the retry that follows failed attempt `attempt`.
    pub fn delay(&self, attempt: u32) -> Duration {
        let exp = attempt.saturating_sub(1).min(i32::MAX as u32) as i32;
        let ms = self.base_backoff_ms as f64 * self.backoff_multiplier.powi(exp);
        let capped = if ms.is_finite() {
            ms.min(self.max_backoff_ms as f64)
        } else {
            self.max_backoff_ms as f64
        };
        Duration::from_millis(capped as u64)
    }

    pub fn retries(&self, class: ErrorClass) -> bool {
        self.retry_on.contains(&class)
    }
}

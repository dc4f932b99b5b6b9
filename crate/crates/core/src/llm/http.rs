//! HTTP completion client.
//!
//! | flavor               | request body                                                                 | generated text             |
//! |----------------------|------------------------------------------------------------------------------|----------------------------|
//! | `hf-inference`       | `{"inputs", "parameters": {"max_new_tokens", "return_full_text": false, "do_sample", "temperature"?}}` | `[0].generated_text` or `.generated_text` |
//! | `openai-completions` | `{"model", "prompt", "max_tokens", "temperature"}`                           | `.choices[0].text`         |
//!
//! The token, when configured, is sent as `Authorization: Bearer <token>`
//! and nowhere else.
//!
//! Status mapping: 429 is rate limiting, 408 a timeout, 401/403 an auth
//! failure (never retried), 5xx a server error, any other non-2xx a bad
//! response.

use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{CompletionModel, CompletionResult, ErrorClass, LlmError, RetryPolicy, Secret};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndpointFlavor {
    #[default]
    HfInference,
    OpenaiCompletions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub name: String,
    pub base_url: String,
    #[serde(default)]
    pub flavor: EndpointFlavor,
    /// Environment variable holding the bearer token. No token is sent when
    /// unset.
    #[serde(default)]
    pub auth_token_env: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_max_prompt_chars")]
    pub max_prompt_chars: usize,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_new_tokens")]
    pub max_new_tokens: u32,
    /// Client-wide request rate limit; unlimited when absent.
    #[serde(default)]
    pub requests_per_minute: Option<u32>,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_timeout_ms() -> u64 {
    60_000
}

fn default_max_prompt_chars() -> usize {
    16_000
}

fn default_max_new_tokens() -> u32 {
    64
}

impl EndpointConfig {
    pub fn new(name: impl Into<String>, base_url: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            base_url: base_url.into(),
            flavor: EndpointFlavor::default(),
            auth_token_env: None,
            timeout_ms: default_timeout_ms(),
            max_prompt_chars: default_max_prompt_chars(),
            temperature: 0.0,
            max_new_tokens: default_max_new_tokens(),
            requests_per_minute: None,
            retry: RetryPolicy::default(),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        let bad = |m: &str| Err(LlmError::InvalidConfig(format!("{}: {m}", self.name)));
        if self.timeout_ms == 0 {
            return bad("timeout_ms must be > 0");
        }
        if self.max_prompt_chars == 0 {
            return bad("max_prompt_chars must be > 0");
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return bad("temperature must be >= 0");
        }
        if self.requests_per_minute == Some(0) {
            return bad("requests_per_minute must be > 0");
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return bad("base_url must be an http(s) URL");
        }
        self.retry.validate()
    }

    /// JSON request body for one prompt.
    pub fn request_body(&self, prompt: &str) -> Value {
        match self.flavor {
            EndpointFlavor::HfInference => {
                let mut params = json!({
                    "max_new_tokens": self.max_new_tokens,
                    "return_full_text": false,
                    "do_sample": self.temperature > 0.0,
                });
                if self.temperature > 0.0 {
                    params["temperature"] = json!(self.temperature);
                }
                json!({ "inputs": prompt, "parameters": params })
            }
            EndpointFlavor::OpenaiCompletions => json!({
                "model": self.name,
                "prompt": prompt,
                "max_tokens": self.max_new_tokens,
                "temperature": self.temperature,
            }),
        }
    }

    /// Extracts the generated text from a response body.
    pub fn generated_text(&self, body: &str) -> Result<String, String> {
        let v: Value = serde_json::from_str(body).map_err(|e| format!("invalid JSON: {e}"))?;
        let text = match self.flavor {
            EndpointFlavor::HfInference => v
                .get(0)
                .unwrap_or(&v)
                .get("generated_text")
                .and_then(Value::as_str),
            EndpointFlavor::OpenaiCompletions => v
                .get("choices")
                .and_then(|c| c.get(0))
                .and_then(|c| c.get("text"))
                .and_then(Value::as_str),
        };
        text.map(str::to_string)
            .ok_or_else(|| "no generated text field in response".to_string())
    }
}

enum Failure {
    Timeout,
    RateLimited,
    Server(u16),
    Transport(String),
    Auth(u16),
    Bad(String),
}

impl Failure {
    fn class(&self) -> Option<ErrorClass> {
        match self {
            Failure::Timeout => Some(ErrorClass::Timeout),
            Failure::RateLimited => Some(ErrorClass::RateLimited),
            Failure::Server(_) => Some(ErrorClass::Server),
            Failure::Transport(_) => Some(ErrorClass::Transport),
            Failure::Auth(_) => Some(ErrorClass::Auth),
            Failure::Bad(_) => None,
        }
    }

    fn into_error(self, endpoint: &str, attempts: u32) -> LlmError {
        let endpoint = endpoint.to_string();
        match self {
            Failure::Timeout => LlmError::Timeout { endpoint, attempts },
            Failure::RateLimited => LlmError::RateLimited { endpoint, attempts },
            Failure::Server(status) => LlmError::Server {
                endpoint,
                status,
                attempts,
            },
            Failure::Transport(message) => LlmError::Transport {
                endpoint,
                message,
                attempts,
            },
            Failure::Auth(status) => LlmError::Auth { endpoint, status },
            Failure::Bad(message) => LlmError::BadResponse { endpoint, message },
        }
    }
}

pub struct HttpClient {
    config: EndpointConfig,
    token: Option<Secret>,
    agent: ureq::Agent,
    next_slot: Mutex<Option<Instant>>,
}

impl std::fmt::Debug for HttpClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpClient")
            .field("config", &self.config)
            .field("token", &self.token)
            .finish()
    }
}

impl HttpClient {
    /// Validates the config and resolves the token from the environment.
    pub fn new(config: EndpointConfig) -> Result<Self, LlmError> {
        let token = match &config.auth_token_env {
            Some(var) => Some(Secret::new(
                std::env::var(var).map_err(|_| LlmError::MissingToken(var.clone()))?,
            )),
            None => None,
        };
        Self::with_token(config, token)
    }

    pub fn with_token(config: EndpointConfig, token: Option<Secret>) -> Result<Self, LlmError> {
        config.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            config,
            token,
            agent,
            next_slot: Mutex::new(None),
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn throttle(&self) {
        let Some(rpm) = self.config.requests_per_minute else {
            return;
        };
        let interval = Duration::from_secs_f64(60.0 / rpm as f64);
        let wait = {
            let mut slot = self.next_slot.lock().unwrap_or_else(|p| p.into_inner());
            let now = Instant::now();
            let start = slot.map_or(now, |s| s.max(now));
            *slot = Some(start + interval);
            start - now
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }

    fn attempt(&self, body: &str) -> Result<String, Failure> {
        let mut req = self
            .agent
            .post(&self.config.base_url)
            .header("Content-Type", "application/json");
        if let Some(token) = &self.token {
            req = req.header("Authorization", format!("Bearer {}", token.expose()));
        }
        let mut resp = req.send(body).map_err(classify_transport)?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(classify_transport)?;
        match status {
            200..=299 => self.config.generated_text(&text).map_err(Failure::Bad),
            401 | 403 => Err(Failure::Auth(status)),
            408 => Err(Failure::Timeout),
            429 => Err(Failure::RateLimited),
            500..=599 => Err(Failure::Server(status)),
            other => Err(Failure::Bad(format!("HTTP {other}"))),
        }
    }
}

fn classify_transport(e: ureq::Error) -> Failure {
    match e {
        ureq::Error::Timeout(_) => Failure::Timeout,
        ureq::Error::Io(io)
            if matches!(
                io.kind(),
                std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock
            ) =>
        {
            Failure::Timeout
        }
        other => Failure::Transport(other.to_string()),
    }
}

impl CompletionModel for HttpClient {
    fn name(&self) -> &str {
        &self.config.name
    }

    fn complete(&self, prompt: &str) -> Result<CompletionResult, LlmError> {
        let chars = prompt.chars().count();
        if chars > self.config.max_prompt_chars {
            return Err(LlmError::Oversize {
                chars,
                limit: self.config.max_prompt_chars,
            });
        }
        let body = self.config.request_body(prompt).to_string();
        let policy = &self.config.retry;
        let name = &self.config.name;
        let started = Instant::now();
        let mut retried = Vec::new();
        let mut backoff = Vec::new();
        let mut attempt = 1;
        loop {
            self.throttle();
            log::debug!("{name}: attempt {attempt}, prompt of {chars} chars");
            match self.attempt(&body) {
                Ok(text) => {
                    return Ok(CompletionResult {
                        text,
                        latency: started.elapsed(),
                        attempts: attempt,
                        endpoint_name: name.clone(),
                        retried,
                        backoff,
                    })
                }
                Err(failure) => {
                    let retryable = failure
                        .class()
                        .is_some_and(|c| c != ErrorClass::Auth && policy.retries(c));
                    if !retryable || attempt >= policy.max_attempts {
                        let err = failure.into_error(name, attempt);
                        log::warn!("{err}");
                        return Err(err);
                    }
                    let class = failure.class().expect("retryable failures have a class");
                    let delay = policy.delay(attempt);
                    log::warn!(
                        "{name}: attempt {attempt} failed ({class}), retrying in {} ms",
                        delay.as_millis()
                    );
                    retried.push(class);
                    backoff.push(delay);
                    thread::sleep(delay);
                    attempt += 1;
                }
            }
        }
    }
}

//! Chat-completion HTTP gateway for model-backed games.
//!
//! Speaks a minimal JSON contract so any compatible endpoint works: the
//! request carries `messages`, `temperature`, and `max_tokens`; the reply's
//! first completion text is extracted from `choices[0].message.content`.
//! Transient failures (transport errors, 429, 5xx) retry with exponential
//! backoff; anything else fails the game rather than silently degrading it.

use std::time::Duration;

use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::{AgentBackend, AgentContext, BackendError, DecisionRequest};
use crate::log::BackendKind;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    /// Full URL of the chat-completion endpoint.
    pub endpoint: String,
    /// Name of the environment variable holding the bearer credential;
    /// `None` sends unauthenticated requests.
    pub api_key_env: Option<String>,
    pub model: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            api_key_env: None,
            model: String::from("default"),
            timeout_secs: 60,
            max_retries: 3,
            backoff_base_ms: 500,
            temperature: 0.7,
            max_tokens: 512,
        }
    }
}

pub struct ModelGateway {
    config: GatewayConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl ModelGateway {
    /// Build a gateway, resolving the credential eagerly so a missing
    /// environment variable fails before any game starts.
    pub fn new(config: GatewayConfig) -> Result<Self, BackendError> {
        if config.endpoint.is_empty() {
            return Err(BackendError::Config("model endpoint URL is not set".into()));
        }
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                BackendError::Config(format!("credential variable {var} is not set"))
            })?),
            None => None,
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Ok(Self { config, agent, api_key })
    }

    fn post_once(&self, body: &Value) -> Result<String, TransientOrFatal> {
        let mut req = self
            .agent
            .post(&self.config.endpoint)
            .header("content-type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("authorization", &format!("Bearer {key}"));
        }
        match req.send_json(body) {
            Ok(mut res) => res
                .body_mut()
                .read_to_string()
                .map_err(|e| TransientOrFatal::Transient(format!("body read failed: {e}"))),
            Err(ureq::Error::StatusCode(code)) if code == 429 || code >= 500 => {
                Err(TransientOrFatal::Transient(format!("status {code}")))
            }
            Err(ureq::Error::StatusCode(code)) => Err(TransientOrFatal::Fatal(code)),
            Err(e) => Err(TransientOrFatal::Transient(e.to_string())),
        }
    }

    /// Send one prompt, retrying transient failures, and return the raw
    /// completion text. A reply that is valid JSON but not the expected
    /// envelope is returned verbatim for the repair stage to handle.
    pub fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": [{ "role": "user", "content": prompt }],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });

        let attempts = self.config.max_retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.config.backoff_base_ms.saturating_mul(1u64 << (attempt - 1));
                std::thread::sleep(Duration::from_millis(delay));
            }
            match self.post_once(&body) {
                Ok(text) => {
                    let content = serde_json::from_str::<Value>(&text)
                        .ok()
                        .and_then(|v| {
                            v.pointer("/choices/0/message/content")
                                .and_then(Value::as_str)
                                .map(str::to_string)
                        });
                    return Ok(content.unwrap_or(text));
                }
                Err(TransientOrFatal::Fatal(status)) => {
                    return Err(BackendError::Rejected { status });
                }
                Err(TransientOrFatal::Transient(msg)) => last_error = msg,
            }
        }
        Err(BackendError::Exhausted { attempts, last: last_error })
    }
}

enum TransientOrFatal {
    Transient(String),
    Fatal(u16),
}

impl AgentBackend for ModelGateway {
    fn kind(&self) -> BackendKind {
        BackendKind::ModelGateway
    }

    fn reply(
        &mut self,
        _ctx: &AgentContext,
        _req: &DecisionRequest,
        prompt: &str,
        _rng: &mut ChaCha8Rng,
    ) -> Result<String, BackendError> {
        self.complete(prompt)
    }
}

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use ureq::Agent;

use super::{prompt::SYSTEM_PROMPT, Generator, GeneratorError, ProposalRequest, ProposalResponse};

pub const API_KEY_ENV: &str = "LF_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteConfig {
    /// Base URL; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    /// Delay before each retry, in milliseconds. Its length is the retry count.
    pub backoff_ms: Vec<u64>,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            temperature: 0.8,
            timeout_secs: 120,
            max_in_flight: 4,
            backoff_ms: vec![1000, 4000],
        }
    }
}

/// Client for a chat-completions compatible endpoint.
pub struct RemoteGenerator {
    config: RemoteConfig,
    api_key: Option<String>,
    debug: bool,
    agent: Agent,
}

impl RemoteGenerator {
    /// Reads the API key from [`API_KEY_ENV`].
    pub fn from_env(config: RemoteConfig, debug: bool) -> Self {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        if key.is_none() {
            log::warn!("{API_KEY_ENV} is not set; sending requests without authorization");
        }
        Self::new(config, key, debug)
    }

    pub fn new(config: RemoteConfig, api_key: Option<String>, debug: bool) -> Self {
        let agent = Agent::new_with_config(
            Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
                .http_status_as_error(false)
                .build(),
        );
        Self {
            config,
            api_key,
            debug,
            agent,
        }
    }

    fn redact(&self, text: &str) -> String {
        match &self.api_key {
            Some(k) if !k.is_empty() => text.replace(k.as_str(), "[REDACTED]"),
            _ => text.to_string(),
        }
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn call(&self, body: &serde_json::Value) -> Result<String, GeneratorError> {
        let mut req = self
            .agent
            .post(&self.endpoint())
            .header("Content-Type", "application/json");
        if let Some(k) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| GeneratorError::Transport(self.redact(&e.to_string())))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| GeneratorError::Transport(e.to_string()))?;
        if self.debug {
            log::info!(target: "llm", "response {status}: {}", self.redact(&text));
        }
        if !(200..300).contains(&status) {
            return Err(GeneratorError::Http {
                status,
                body: self.redact(&text),
            });
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| GeneratorError::Malformed(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| GeneratorError::Malformed("no choices[0].message.content".into()))
    }
}

impl Generator for RemoteGenerator {
    fn propose(&self, request: &ProposalRequest) -> Result<ProposalResponse, GeneratorError> {
        let mut body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": request.prompt},
            ],
        });
        if request.max_tokens > 0 {
            body["max_tokens"] = json!(request.max_tokens);
        }
        if self.debug {
            log::info!(target: "llm", "request to {}: {}", self.endpoint(), self.redact(&body.to_string()));
        }
        let mut attempt = 0;
        loop {
            match self.call(&body) {
                Ok(text) => return Ok(ProposalResponse::from_raw(text)),
                Err(e) if e.is_transient() && attempt < self.config.backoff_ms.len() => {
                    let wait = self.config.backoff_ms[attempt];
                    log::warn!("generator call failed ({e}); retrying in {wait} ms");
                    std::thread::sleep(Duration::from_millis(wait));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn name(&self) -> String {
        format!("remote:{}", self.config.model)
    }

    fn max_in_flight(&self) -> usize {
        self.config.max_in_flight.max(1)
    }
}

//! Language model configuration and an OpenAI-compatible chat client.

use std::time::Duration;

use formnav_core::llm::{Completion, LanguageModel, LlmError, Message, Role, StubModel, DEFAULT_STUB_TEMPLATE};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmMode {
    Live,
    #[default]
    Stub,
}

/// Provider settings. The API key itself is never stored; `api_key_env` names the
/// environment variable that holds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub mode: LlmMode,
    /// Base URL of an OpenAI-compatible API; `/chat/completions` is appended.
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
    pub temperature: f64,
    pub timeout_ms: u64,
    pub max_retries: u32,
    /// First backoff delay; doubles after each retry.
    pub backoff_ms: u64,
    /// Stub output template, see [`StubModel`].
    pub stub_template: String,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            mode: LlmMode::Stub,
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            temperature: 0.0,
            timeout_ms: 60_000,
            max_retries: 2,
            backoff_ms: 500,
            stub_template: DEFAULT_STUB_TEMPLATE.into(),
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.model.is_empty() {
            return Err("llm.model is empty".into());
        }
        if self.mode == LlmMode::Live {
            if !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")) {
                return Err(format!("llm.endpoint {:?} is not an http(s) URL", self.endpoint));
            }
            if self.api_key_env.is_empty() {
                return Err("llm.api_key_env is empty".into());
            }
            if self.timeout_ms == 0 {
                return Err("llm.timeout_ms must be positive".into());
            }
        }
        Ok(())
    }
}

/// Chat completions over HTTP with exponential backoff on 429, 5xx and timeouts.
pub struct LiveModel {
    config: LlmConfig,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl std::fmt::Debug for LiveModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveModel").field("endpoint", &self.config.endpoint).field("model", &self.config.model).finish()
    }
}

fn retryable(status: u16) -> bool {
    status == 429 || status >= 500
}

impl LiveModel {
    /// Reads the API key from the environment; fails with `AuthMissing` before any request.
    pub fn new(config: LlmConfig) -> Result<LiveModel, LlmError> {
        Self::with_key_lookup(config, |name| std::env::var(name).ok())
    }

    pub fn with_key_lookup(config: LlmConfig, lookup: impl Fn(&str) -> Option<String>) -> Result<LiveModel, LlmError> {
        let api_key = lookup(&config.api_key_env).filter(|k| !k.is_empty()).ok_or_else(|| LlmError::AuthMissing { var: config.api_key_env.clone() })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| LlmError::Unavailable(e.to_string()))?;
        Ok(LiveModel { config, api_key, client })
    }

    fn body(&self, messages: &[Message]) -> Value {
        let messages: Vec<Value> = messages
            .iter()
            .map(|m| {
                let role = match m.role {
                    Role::System => "system",
                    Role::User => "user",
                    Role::Assistant => "assistant",
                };
                json!({ "role": role, "content": m.content })
            })
            .collect();
        json!({ "model": self.config.model, "messages": messages, "temperature": self.config.temperature })
    }

    fn attempt(&self, body: &Value) -> Result<Completion, (LlmError, bool)> {
        let url = format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'));
        let response = self.client.post(url).bearer_auth(&self.api_key).json(body).send().map_err(|e| {
            if e.is_timeout() {
                (LlmError::Timeout { request_id: None }, true)
            } else {
                (LlmError::Unavailable(e.to_string()), e.is_connect())
            }
        })?;
        let status = response.status().as_u16();
        let header_id = response.headers().get("x-request-id").and_then(|v| v.to_str().ok()).map(String::from);
        let text = response.text().map_err(|e| (LlmError::Unavailable(e.to_string()), true))?;
        let value: Value = serde_json::from_str(&text).unwrap_or(Value::Null);
        let request_id = header_id.or_else(|| value["id"].as_str().map(String::from));
        if status != 200 {
            let message = value["error"]["message"].as_str().map(String::from).unwrap_or_else(|| text.chars().take(200).collect());
            return Err((LlmError::Provider { status, message, request_id }, retryable(status)));
        }
        let content = value["choices"][0]["message"]["content"].as_str().ok_or_else(|| {
            (LlmError::Provider { status, message: "reply has no choices[0].message.content".into(), request_id: request_id.clone() }, false)
        })?;
        Ok(Completion { text: content.to_string(), request_id, retries: 0 })
    }
}

impl LanguageModel for LiveModel {
    fn model_id(&self) -> &str {
        &self.config.model
    }

    fn complete(&mut self, messages: &[Message]) -> Result<Completion, LlmError> {
        let body = self.body(messages);
        let mut delay = self.config.backoff_ms;
        let mut retries = 0;
        loop {
            match self.attempt(&body) {
                Ok(mut completion) => {
                    completion.retries = retries;
                    return Ok(completion);
                }
                Err((error, true)) if retries < self.config.max_retries => {
                    log::warn!("llm request failed ({}), retrying in {} ms", error, delay);
                    std::thread::sleep(Duration::from_millis(delay));
                    delay = delay.saturating_mul(2);
                    retries += 1;
                }
                Err((error, _)) => return Err(error),
            }
        }
    }
}

/// The configured model: a deterministic stub, or the live client.
pub fn build_model(config: &LlmConfig) -> Result<Box<dyn LanguageModel>, LlmError> {
    match config.mode {
        LlmMode::Stub => Ok(Box::new(StubModel::with_template(config.model.clone(), config.stub_template.clone()))),
        LlmMode::Live => Ok(Box::new(LiveModel::new(config.clone())?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Serves one canned response per connection, in order.
    fn fake_server(responses: Vec<(u16, &'static str)>) -> (String, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let Ok((stream, _)) = listener.accept() else { return };
                counter.fetch_add(1, Ordering::SeqCst);
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                }
                let mut body_in = vec![0; length];
                reader.read_exact(&mut body_in).unwrap();
                let reply = format!(
                    "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nx-request-id: req-{}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    status,
                    status,
                    body.len(),
                    body
                );
                let mut stream = stream;
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });
        (format!("http://{}/v1", addr), hits)
    }

    fn live(endpoint: String, retries: u32) -> LlmConfig {
        LlmConfig { mode: LlmMode::Live, endpoint, max_retries: retries, backoff_ms: 1, api_key_env: "TEST_KEY".into(), ..Default::default() }
    }

    const OK: &str = r#"{"id":"chat-1","choices":[{"message":{"role":"assistant","content":"hello"}}]}"#;

    #[test]
    fn retries_after_rate_limit() {
        let (endpoint, hits) = fake_server(vec![(429, r#"{"error":{"message":"slow down"}}"#), (200, OK)]);
        let mut m = LiveModel::with_key_lookup(live(endpoint, 2), |_| Some("k".into())).unwrap();
        let c = m.complete(&[Message::user("hi")]).unwrap();
        assert_eq!((c.text.as_str(), c.retries), ("hello", 1));
        assert_eq!(c.request_id.as_deref(), Some("req-200"));
        assert_eq!(hits.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn gives_up_after_max_retries() {
        let (endpoint, hits) = fake_server(vec![(503, "{}"), (503, "{}"), (200, OK)]);
        let mut m = LiveModel::with_key_lookup(live(endpoint, 1), |_| Some("k".into())).unwrap();
        let err = m.complete(&[Message::user("hi")]).unwrap_err();
        assert!(matches!(err, LlmError::Provider { status: 503, request_id: Some(ref id), .. } if id == "req-503"));
        assert_eq!(hits.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (endpoint, hits) = fake_server(vec![(401, r#"{"error":{"message":"bad key"}}"#), (200, OK)]);
        let mut m = LiveModel::with_key_lookup(live(endpoint, 3), |_| Some("k".into())).unwrap();
        assert!(matches!(m.complete(&[Message::user("hi")]), Err(LlmError::Provider { status: 401, .. })));
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn missing_key_fails_before_any_request() {
        let (endpoint, hits) = fake_server(vec![(200, OK)]);
        let err = LiveModel::with_key_lookup(live(endpoint, 2), |_| None).unwrap_err();
        assert_eq!(err, LlmError::AuthMissing { var: "TEST_KEY".into() });
        assert_eq!(hits.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn stub_mode_is_deterministic() {
        let mut m = build_model(&LlmConfig::default()).unwrap();
        let a = m.complete(&[Message::user("x")]).unwrap();
        assert_eq!(a, m.complete(&[Message::user("x")]).unwrap());
    }
}

//! Language model interface and the deterministic stub used offline.

use alloc::collections::VecDeque;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dom::to_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<String>,
    /// Attempts beyond the first that were needed.
    #[serde(default)]
    pub retries: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("environment variable {var} with the API key is not set")]
    AuthMissing { var: String },
    #[error("request timed out (request id {request_id:?})")]
    Timeout { request_id: Option<String> },
    #[error("provider returned status {status}: {message} (request id {request_id:?})")]
    Provider { status: u16, message: String, request_id: Option<String> },
    #[error("model unavailable: {0}")]
    Unavailable(String),
}

pub trait LanguageModel {
    fn model_id(&self) -> &str;

    fn complete(&mut self, messages: &[Message]) -> Result<Completion, LlmError>;
}

impl<M: LanguageModel + ?Sized> LanguageModel for alloc::boxed::Box<M> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn complete(&mut self, messages: &[Message]) -> Result<Completion, LlmError> {
        (**self).complete(messages)
    }
}

pub const DEFAULT_STUB_TEMPLATE: &str = "stub:{model}:{digest}";

/// Deterministic model: expands a template over the last user message.
///
/// Placeholders: `{input}` (the message), `{model}` and `{digest}` (first 16 hex digits of the
/// message's SHA-256).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StubModel {
    model: String,
    template: String,
}

impl StubModel {
    pub fn new(model: impl Into<String>) -> Self {
        StubModel { model: model.into(), template: DEFAULT_STUB_TEMPLATE.into() }
    }

    pub fn with_template(model: impl Into<String>, template: impl Into<String>) -> Self {
        StubModel { model: model.into(), template: template.into() }
    }

    pub fn expand(&self, input: &str) -> String {
        let digest = to_hex(&Sha256::digest(input.as_bytes()));
        self.template.replace("{model}", &self.model).replace("{digest}", &digest[..16]).replace("{input}", input)
    }
}

impl LanguageModel for StubModel {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&mut self, messages: &[Message]) -> Result<Completion, LlmError> {
        let input = messages.iter().rev().find(|m| m.role == Role::User).map(|m| m.content.as_str()).unwrap_or("");
        Ok(Completion { text: self.expand(input), request_id: None, retries: 0 })
    }
}

/// Returns queued responses in order, then reports itself unavailable. Records every prompt.
#[derive(Debug, Clone, Default)]
pub struct ReplayModel {
    model: String,
    responses: VecDeque<String>,
    pub prompts: Vec<Vec<Message>>,
}

impl ReplayModel {
    pub fn new(model: impl Into<String>, responses: impl IntoIterator<Item = String>) -> Self {
        ReplayModel { model: model.into(), responses: responses.into_iter().collect(), prompts: Vec::new() }
    }
}

impl LanguageModel for ReplayModel {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn complete(&mut self, messages: &[Message]) -> Result<Completion, LlmError> {
        self.prompts.push(messages.to_vec());
        match self.responses.pop_front() {
            Some(text) => Ok(Completion { text, request_id: None, retries: 0 }),
            None => Err(LlmError::Unavailable("no responses left".to_string())),
        }
    }
}

/// Substitute `{name}` placeholders.
pub fn fill_template(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::from(template);
    for (name, value) in values {
        out = out.replace(&alloc::format!("{{{}}}", name), value);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn stub_is_deterministic() {
        let mut m = StubModel::new("gpt-4o-mini");
        let prompt = vec![Message::system("s"), Message::user("hello")];
        let a = m.complete(&prompt).unwrap();
        let b = m.complete(&prompt).unwrap();
        assert_eq!(a, b);
        assert!(a.text.starts_with("stub:gpt-4o-mini:"));
        let mut echo = StubModel::with_template("m", "{input}!");
        assert_eq!(echo.complete(&prompt).unwrap().text, "hello!");
    }

    #[test]
    fn replay_runs_dry() {
        let mut m = ReplayModel::new("r", vec!["one".into()]);
        assert_eq!(m.complete(&[]).unwrap().text, "one");
        assert!(matches!(m.complete(&[]), Err(LlmError::Unavailable(_))));
        assert_eq!(m.prompts.len(), 2);
    }
}

//! Chat-completion clients: a live HTTP client and a scripted stand-in.

use std::collections::VecDeque;
use std::sync::Mutex;
#[cfg(feature = "http")]
use std::thread;
#[cfg(feature = "http")]
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Anything that can answer a chat transcript. Implementations handle one
/// request at a time.
pub trait ChatClient {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, LlmError>;
}

fn check_transcript(messages: &[ChatMessage]) -> Result<(), LlmError> {
    match messages.first() {
        None => Err(LlmError::Precondition("transcript is empty".into())),
        Some(m) if m.role != Role::System => Err(LlmError::Precondition(
            "transcript must start with the system message".into(),
        )),
        Some(_) => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmClientConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: f64,
    /// Extra attempts after a transport failure, 429, or 5xx.
    pub retries: u32,
    pub backoff_ms: u64,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
}

impl Default for LlmClientConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-2024-08-06".into(),
            temperature: 0.2,
            timeout_secs: 120.0,
            retries: 3,
            backoff_ms: 500,
            api_key_env: "LLM_API_KEY".into(),
        }
    }
}

impl LlmClientConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.temperature >= 0.0) {
            return Err(LlmError::Precondition(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(LlmError::Precondition("timeout must be > 0".into()));
        }
        if self.endpoint.trim().is_empty() {
            return Err(LlmError::Precondition("endpoint URL is empty".into()));
        }
        Ok(())
    }
}

/// Request body for an OpenAI-style chat-completion endpoint.
pub fn request_body(config: &LlmClientConfig, messages: &[ChatMessage]) -> Value {
    json!({
        "model": config.model,
        "temperature": config.temperature,
        "messages": messages,
    })
}

/// Pulls `choices[0].message.content` out of a response body.
pub fn response_content(body: &str) -> Result<String, LlmError> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| LlmError::MalformedResponse("missing choices[0].message.content".into()))
}

#[cfg(feature = "http")]
#[derive(Debug)]
pub struct HttpChatClient {
    config: LlmClientConfig,
    http: reqwest::blocking::Client,
}

#[cfg(feature = "http")]
enum Attempt {
    Done(String),
    Retry(LlmError),
}

#[cfg(feature = "http")]
impl HttpChatClient {
    pub fn new(config: LlmClientConfig) -> Result<Self, LlmError> {
        config.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Transport {
                attempts: 0,
                detail: e.to_string(),
            })?;
        Ok(Self { config, http })
    }

    pub fn config(&self) -> &LlmClientConfig {
        &self.config
    }

    fn attempt(&self, body: &Value, attempts: u32) -> Result<Attempt, LlmError> {
        let mut request = self.http.post(&self.config.endpoint).json(body);
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            request = request.bearer_auth(key);
        }
        let response = match request.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Ok(Attempt::Retry(LlmError::Timeout { attempts })),
            Err(e) => {
                return Ok(Attempt::Retry(LlmError::Transport {
                    attempts,
                    detail: e.to_string(),
                }))
            }
        };
        let status = response.status().as_u16();
        let text = response.text().map_err(|e| LlmError::Transport {
            attempts,
            detail: e.to_string(),
        })?;
        match status {
            200..=299 => response_content(&text).map(Attempt::Done),
            401 | 403 => Err(LlmError::Auth {
                status,
                env_var: self.config.api_key_env.clone(),
            }),
            429 | 500..=599 => Ok(Attempt::Retry(LlmError::Http { status, body: text })),
            _ => Err(LlmError::Http { status, body: text }),
        }
    }
}

#[cfg(feature = "http")]
impl ChatClient for HttpChatClient {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, LlmError> {
        check_transcript(messages)?;
        let body = request_body(&self.config, messages);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body, attempts)? {
                Attempt::Done(content) => return Ok(content),
                Attempt::Retry(err) if attempts > self.config.retries => return Err(err),
                Attempt::Retry(_) => {
                    let wait = self.config.backoff_ms.saturating_mul(1 << (attempts - 1).min(16));
                    thread::sleep(Duration::from_millis(wait));
                }
            }
        }
    }
}

/// Sends one transcript to the configured endpoint.
#[cfg(feature = "http")]
pub fn chat_complete(messages: &[ChatMessage], config: &LlmClientConfig) -> Result<String, LlmError> {
    check_transcript(messages)?;
    HttpChatClient::new(config.clone())?.complete(messages)
}

/// Replays canned replies in order, for offline runs and tests.
#[derive(Debug, Default)]
pub struct ScriptedClient {
    replies: Mutex<VecDeque<String>>,
    consumed: Mutex<usize>,
    seen: Mutex<Vec<Vec<ChatMessage>>>,
}

impl ScriptedClient {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            replies: Mutex::new(replies.into_iter().map(Into::into).collect()),
            ..Self::default()
        }
    }

    /// Reads a JSON array of strings.
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        let replies: Vec<String> = serde_json::from_str(text)?;
        Ok(Self::new(replies))
    }

    pub fn consumed(&self) -> usize {
        *self.consumed.lock().expect("script lock poisoned")
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().expect("script lock poisoned").len()
    }

    /// Every transcript this client was asked to complete.
    pub fn requests(&self) -> Vec<Vec<ChatMessage>> {
        self.seen.lock().expect("script lock poisoned").clone()
    }
}

impl ChatClient for ScriptedClient {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, LlmError> {
        check_transcript(messages)?;
        let mut consumed = self.consumed.lock().expect("script lock poisoned");
        let reply = self
            .replies
            .lock()
            .expect("script lock poisoned")
            .pop_front()
            .ok_or(LlmError::ScriptExhausted { consumed: *consumed })?;
        *consumed += 1;
        self.seen
            .lock()
            .expect("script lock poisoned")
            .push(messages.to_vec());
        Ok(reply)
    }
}

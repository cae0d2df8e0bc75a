//! Chat providers: a fixture replayer for offline runs and an HTTP client
//! for chat-completions style endpoints.

use super::proposal::{Shape, Usage};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatRequest {
    pub template_id: String,
    pub system: String,
    pub user: String,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatResponse {
    pub text: String,
    pub usage: Option<Usage>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("fixture exhausted at template `{0}` and no fallback configured")]
    Exhausted(String),
    #[error("environment variable {0} is not set")]
    MissingKey(String),
    #[error("fixture: {0}")]
    Fixture(String),
}

impl ProviderError {
    /// Worth retrying: network trouble, rate limits and server errors.
    pub fn is_transient(&self) -> bool {
        match self {
            ProviderError::Transport(_) => true,
            ProviderError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// One round-trip to a model. Implementations must be callable from
/// several threads.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError>;
}

/// One canned response and the templates it may answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureEntry {
    /// Exact template id, `family/*`, or `*`.
    #[serde(rename = "match")]
    pub matcher: String,
    pub response: String,
}

impl FixtureEntry {
    pub fn new(matcher: impl Into<String>, response: impl Into<String>) -> Self {
        FixtureEntry { matcher: matcher.into(), response: response.into() }
    }

    pub fn matches(&self, template_id: &str) -> bool {
        match self.matcher.strip_suffix('*') {
            Some(prefix) => template_id.starts_with(prefix),
            None => self.matcher == template_id,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    /// Answer with the task's baseline seed code once the fixture runs out.
    #[default]
    EchoSeed,
    /// Fail once the fixture runs out.
    None,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub entries: Vec<FixtureEntry>,
    #[serde(default)]
    pub fallback: Fallback,
}

impl Fixture {
    pub fn load(path: &Path) -> Result<Fixture, ProviderError> {
        let text = std::fs::read_to_string(path).map_err(|e| ProviderError::Fixture(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ProviderError::Fixture(format!("{}: {e}", path.display())))
    }
}

/// Serves fixture entries in order: each request takes the first unused
/// entry whose matcher accepts its template id.
#[derive(Debug)]
pub struct ReplayProvider {
    entries: Vec<FixtureEntry>,
    used: Mutex<Vec<bool>>,
    fallback: Option<String>,
}

pub const FALLBACK_KNOWLEDGE: &str = "Keep the baseline design.";

impl ReplayProvider {
    /// `seed_code` backs the echo fallback.
    pub fn new(fixture: Fixture, seed_code: &str) -> Self {
        let fallback = match fixture.fallback {
            Fallback::EchoSeed => Some(format!("KNOWLEDGE: {FALLBACK_KNOWLEDGE}\nCODE:\n```python\n{}\n```", seed_code.trim_end())),
            Fallback::None => None,
        };
        let used = Mutex::new(vec![false; fixture.entries.len()]);
        ReplayProvider { entries: fixture.entries, used, fallback }
    }

    pub fn remaining(&self) -> usize {
        self.used.lock().expect("fixture lock").iter().filter(|u| !**u).count()
    }
}

impl ChatProvider for ReplayProvider {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let mut used = self.used.lock().expect("fixture lock");
        let hit = self.entries.iter().enumerate().find(|(i, e)| !used[*i] && e.matches(&request.template_id));
        let text = match hit {
            Some((i, e)) => {
                used[i] = true;
                e.response.clone()
            }
            None => self.fallback.clone().ok_or_else(|| ProviderError::Exhausted(request.template_id.clone()))?,
        };
        Ok(ChatResponse { text, usage: None })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    /// Decoding parameters copied into the request body untouched.
    #[serde(default)]
    pub params: Map<String, Value>,
    /// Ask for a two-field JSON object on knowledge-and-code calls.
    #[serde(default)]
    pub structured_output: bool,
    #[serde(default = "default_http_timeout")]
    pub timeout_secs: f64,
}

fn default_key_env() -> String {
    "AHD_API_KEY".into()
}

fn default_http_timeout() -> f64 {
    300.0
}

#[derive(Debug)]
pub struct HttpProvider {
    config: HttpConfig,
    key: String,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(config: HttpConfig) -> Result<Self, ProviderError> {
        let key = std::env::var(&config.api_key_env).map_err(|_| ProviderError::MissingKey(config.api_key_env.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(HttpProvider { config, key, client })
    }

    /// The JSON body sent for `request`.
    pub fn body(config: &HttpConfig, request: &ChatRequest) -> Value {
        let mut body = config.params.clone();
        body.insert("model".into(), json!(config.model));
        body.insert(
            "messages".into(),
            json!([
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ]),
        );
        if config.structured_output && request.shape == Shape::KnowledgeCode {
            body.insert(
                "response_format".into(),
                json!({
                    "type": "json_schema",
                    "json_schema": {
                        "name": "knowledge_and_code",
                        "strict": true,
                        "schema": {
                            "type": "object",
                            "properties": {"knowledge": {"type": "string"}, "code": {"type": "string"}},
                            "required": ["knowledge", "code"],
                            "additionalProperties": false,
                        },
                    },
                }),
            );
        }
        Value::Object(body)
    }
}

/// Pull the first choice's text and the token counts out of a response.
pub fn parse_completion(doc: &Value) -> Result<ChatResponse, ProviderError> {
    let text = doc
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| ProviderError::Malformed("no choices[0].message.content".into()))?;
    let usage = doc.get("usage").map(|u| Usage {
        prompt_tokens: u.get("prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
        completion_tokens: u.get("completion_tokens").and_then(Value::as_u64).unwrap_or(0),
    });
    Ok(ChatResponse { text: text.to_owned(), usage })
}

impl ChatProvider for HttpProvider {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let response = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(&self.key)
            .json(&Self::body(&self.config, request))
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response.text().map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ProviderError::Status { status: status.as_u16(), body: text.chars().take(500).collect() });
        }
        let doc: Value = serde_json::from_str(&text).map_err(|e| ProviderError::Malformed(e.to_string()))?;
        parse_completion(&doc)
    }
}

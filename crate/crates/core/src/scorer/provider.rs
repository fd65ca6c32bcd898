use super::PeaceDimension;
use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::Path;

pub const LLM_API_KEY_ENV: &str = "PEACE_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "assistant".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlmRequest {
    /// Lets fixture-driven providers look up canned responses.
    pub transcript_id: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl LlmRequest {
    /// Zero-based attempt number: how many replies are already in the thread.
    pub fn attempt(&self) -> usize {
        self.messages.iter().filter(|m| m.role == "assistant").count()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("missing credentials: set {0}")]
    MissingCredentials(String),
    #[error("provider request failed: {message}")]
    Transport { message: String, retryable: bool },
    #[error("no fixture for transcript {0:?}")]
    UnknownFixture(String),
    #[error("fixture file: {0}")]
    Fixture(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Transport { retryable: true, .. })
    }
}

#[async_trait]
pub trait LlmProvider: Send + Sync {
    fn model_id(&self) -> &str;
    async fn complete(&self, request: &LlmRequest) -> Result<String, ProviderError>;
}

#[derive(Deserialize)]
struct FixtureLine {
    transcript_id: String,
    #[serde(default)]
    response: Option<String>,
    #[serde(default)]
    responses: Vec<String>,
}

/// Canned responses keyed by transcript id, read from JSONL lines
/// `{"transcript_id": .., "response": ..}` or `{"transcript_id": .., "responses": [..]}`.
/// Attempt `k` of a conversation gets `responses[k]`, repeating the last one,
/// so the reply is a pure function of the request.
#[derive(Debug, Clone)]
pub struct MockLlmProvider {
    model_id: String,
    fixtures: HashMap<String, Vec<String>>,
}

impl MockLlmProvider {
    pub fn new(model_id: impl Into<String>) -> Self {
        MockLlmProvider {
            model_id: model_id.into(),
            fixtures: HashMap::new(),
        }
    }

    pub fn with_responses(mut self, transcript_id: impl Into<String>, responses: Vec<String>) -> Self {
        self.fixtures.insert(transcript_id.into(), responses);
        self
    }

    pub fn parse_jsonl(model_id: impl Into<String>, text: &str) -> Result<Self, ProviderError> {
        let mut m = Self::new(model_id);
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: FixtureLine = serde_json::from_str(line)
                .map_err(|e| ProviderError::Fixture(format!("line {}: {e}", n + 1)))?;
            let mut responses = f.responses;
            if let Some(r) = f.response {
                responses.insert(0, r);
            }
            if responses.is_empty() {
                return Err(ProviderError::Fixture(format!("line {}: no response", n + 1)));
            }
            m.fixtures.insert(f.transcript_id, responses);
        }
        Ok(m)
    }

    pub fn load(model_id: impl Into<String>, path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ProviderError::Fixture(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse_jsonl(model_id, &text)
    }
}

#[async_trait]
impl LlmProvider for MockLlmProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    async fn complete(&self, request: &LlmRequest) -> Result<String, ProviderError> {
        let responses = self
            .fixtures
            .get(&request.transcript_id)
            .ok_or_else(|| ProviderError::UnknownFixture(request.transcript_id.clone()))?;
        Ok(responses[request.attempt().min(responses.len() - 1)].clone())
    }
}

/// Offline provider that answers every prompt with valid scores derived from
/// a hash of the first message. No network, fully deterministic.
#[derive(Debug, Clone)]
pub struct StubLlmProvider {
    model_id: String,
}

impl Default for StubLlmProvider {
    fn default() -> Self {
        StubLlmProvider {
            model_id: "stub-llm".into(),
        }
    }
}

#[async_trait]
impl LlmProvider for StubLlmProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    async fn complete(&self, request: &LlmRequest) -> Result<String, ProviderError> {
        let prompt = request.messages.first().map_or("", |m| m.content.as_str());
        let digest = Sha256::digest(prompt.as_bytes());
        let mut scores = serde_json::Map::new();
        let mut rationales = serde_json::Map::new();
        for (i, d) in PeaceDimension::ALL.iter().enumerate() {
            scores.insert(d.key().into(), (1 + digest[i] % 5).into());
            rationales.insert(d.key().into(), "stub rationale".into());
        }
        scores.insert("rationales".into(), rationales.into());
        Ok(serde_json::Value::Object(scores).to_string())
    }
}

/// OpenAI-compatible `POST {base_url}/chat/completions` client.
pub struct HttpLlmProvider {
    client: reqwest::Client,
    base_url: String,
    api_key: String,
    model_id: String,
}

impl HttpLlmProvider {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>, model_id: impl Into<String>) -> Self {
        HttpLlmProvider {
            client: reqwest::Client::new(),
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            model_id: model_id.into(),
        }
    }

    pub fn from_env(base_url: impl Into<String>, model_id: impl Into<String>) -> Result<Self, ProviderError> {
        let key = std::env::var(LLM_API_KEY_ENV)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| ProviderError::MissingCredentials(LLM_API_KEY_ENV.into()))?;
        Ok(Self::new(base_url, key, model_id))
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[async_trait]
impl LlmProvider for HttpLlmProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    async fn complete(&self, request: &LlmRequest) -> Result<String, ProviderError> {
        let body = serde_json::json!({
            "model": self.model_id,
            "messages": request.messages,
            "temperature": request.temperature,
        });
        let resp = self
            .client
            .post(format!("{}/chat/completions", self.base_url))
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .await
            .map_err(|e| ProviderError::Transport {
                message: e.to_string(),
                retryable: true,
            })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(ProviderError::Transport {
                message: format!("status {status}"),
                retryable: status.is_server_error() || status.as_u16() == 429,
            });
        }
        let parsed: ChatResponse = resp.json().await.map_err(|e| ProviderError::Transport {
            message: format!("malformed response: {e}"),
            retryable: false,
        })?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| ProviderError::Transport {
                message: "no choices in response".into(),
                retryable: false,
            })
    }
}

use super::{EmotionError, EmotionProfile};
use crate::retry::{with_retry, RetryPolicy};
use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

/// Environment variable naming the emotion classifier endpoint.
pub const EMOTION_ENDPOINT_ENV: &str = "PEACE_EMOTION_ENDPOINT";

/// Anything that turns chunks into emotion profiles, one per chunk.
#[async_trait]
pub trait EmotionSource: Send + Sync {
    async fn profiles(&self, chunks: &[String]) -> Result<Vec<EmotionProfile>, EmotionError>;
}

/// Fetch and validate: one profile per chunk, `chunk_id` equal to its index.
pub async fn fetch_profiles(
    chunks: &[String],
    source: &dyn EmotionSource,
) -> Result<Vec<EmotionProfile>, EmotionError> {
    let profiles = source.profiles(chunks).await?;
    if profiles.len() != chunks.len() {
        return Err(EmotionError::Schema(format!(
            "{} profiles for {} chunks",
            profiles.len(),
            chunks.len()
        )));
    }
    for (i, p) in profiles.iter().enumerate() {
        if p.chunk_id != i {
            return Err(EmotionError::Schema(format!("profile {i} carries chunk_id {}", p.chunk_id)));
        }
    }
    Ok(profiles)
}

#[derive(Serialize)]
struct EndpointRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EndpointResponse {
    profiles: Vec<BTreeMap<String, f64>>,
}

/// JSON endpoint client: `{"texts": [...]}` in, `{"profiles": [{category: score}]}` out.
pub struct HttpEmotionSource {
    client: reqwest::Client,
    endpoint: String,
    retry: RetryPolicy,
}

impl HttpEmotionSource {
    pub fn new(endpoint: impl Into<String>, retry: RetryPolicy) -> Self {
        HttpEmotionSource {
            client: reqwest::Client::new(),
            endpoint: endpoint.into(),
            retry,
        }
    }

    pub fn from_env(retry: RetryPolicy) -> Result<Self, EmotionError> {
        let endpoint = std::env::var(EMOTION_ENDPOINT_ENV)
            .map_err(|_| EmotionError::Config(format!("{EMOTION_ENDPOINT_ENV} is not set")))?;
        Ok(Self::new(endpoint, retry))
    }

    async fn call(&self, chunks: &[String]) -> Result<EndpointResponse, EmotionError> {
        let resp = self
            .client
            .post(&self.endpoint)
            .json(&EndpointRequest { texts: chunks })
            .send()
            .await
            .map_err(|e| EmotionError::Endpoint {
                message: e.to_string(),
                retryable: true,
            })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(EmotionError::Endpoint {
                message: format!("status {status}"),
                retryable: status.is_server_error() || status.as_u16() == 429,
            });
        }
        resp.json().await.map_err(|e| EmotionError::Schema(e.to_string()))
    }
}

#[async_trait]
impl EmotionSource for HttpEmotionSource {
    async fn profiles(&self, chunks: &[String]) -> Result<Vec<EmotionProfile>, EmotionError> {
        let resp = with_retry(&self.retry, EmotionError::is_retryable, |_| self.call(chunks)).await?;
        resp.profiles
            .iter()
            .enumerate()
            .map(|(i, m)| EmotionProfile::from_map(i, m))
            .collect()
    }
}

#[derive(Deserialize)]
struct FileLine {
    chunk_index: usize,
    scores: BTreeMap<String, f64>,
}

/// Precomputed profiles from JSONL lines `{"chunk_index": n, "scores": {...}}`.
#[derive(Debug, Clone)]
pub struct FileEmotionSource {
    profiles: Vec<EmotionProfile>,
}

impl FileEmotionSource {
    pub fn parse(text: &str) -> Result<Self, EmotionError> {
        let mut by_index = BTreeMap::new();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let l: FileLine = serde_json::from_str(line)
                .map_err(|e| EmotionError::Schema(format!("line {}: {e}", n + 1)))?;
            let p = EmotionProfile::from_map(l.chunk_index, &l.scores)?;
            if by_index.insert(l.chunk_index, p).is_some() {
                return Err(EmotionError::Schema(format!("duplicate chunk_index {}", l.chunk_index)));
            }
        }
        if let Some((pos, (idx, _))) = by_index.iter().enumerate().find(|(pos, (idx, _))| *pos != **idx) {
            return Err(EmotionError::Schema(format!("chunk_index {idx} found where {pos} expected")));
        }
        Ok(FileEmotionSource {
            profiles: by_index.into_values().collect(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmotionError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

#[async_trait]
impl EmotionSource for FileEmotionSource {
    async fn profiles(&self, chunks: &[String]) -> Result<Vec<EmotionProfile>, EmotionError> {
        if chunks.len() != self.profiles.len() {
            return Err(EmotionError::Schema(format!(
                "profile file holds {} chunks, transcript has {}",
                self.profiles.len(),
                chunks.len()
            )));
        }
        Ok(self.profiles.clone())
    }
}

const POSITIVE_WORDS: &[&str] = &[
    "love", "thank", "thanks", "great", "hope", "peace", "happy", "good", "wonderful", "kind", "together",
];
const NEGATIVE_WORDS: &[&str] = &[
    "hate", "angry", "terrible", "disgusting", "war", "kill", "awful", "stupid", "enemy", "destroy",
];

/// Offline stand-in for the classifier: a tiny keyword lexicon on top of
/// low, hash-derived background scores. Deterministic per chunk text.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubEmotionSource;

impl StubEmotionSource {
    pub fn profile(chunk_id: usize, text: &str) -> EmotionProfile {
        let digest = Sha256::digest(text.as_bytes());
        let mut scores = [0.0; 28];
        for (i, s) in scores.iter_mut().enumerate() {
            *s = digest[i % 32] as f64 / 255.0 * 0.1;
        }
        let words = crate::corpus::tokenize(text);
        let pos = words.iter().filter(|w| POSITIVE_WORDS.contains(&w.as_str())).count();
        let neg = words.iter().filter(|w| NEGATIVE_WORDS.contains(&w.as_str())).count();
        let joy = super::categories::category_index("joy").unwrap();
        let anger = super::categories::category_index("anger").unwrap();
        scores[super::NEUTRAL_INDEX] = 0.5;
        scores[joy] = (scores[joy] + 0.3 * pos as f64).min(0.95);
        scores[anger] = (scores[anger] + 0.3 * neg as f64).min(0.95);
        EmotionProfile::new(chunk_id, scores).expect("scores built in range")
    }
}

#[async_trait]
impl EmotionSource for StubEmotionSource {
    async fn profiles(&self, chunks: &[String]) -> Result<Vec<EmotionProfile>, EmotionError> {
        Ok(chunks
            .iter()
            .enumerate()
            .map(|(i, c)| Self::profile(i, c))
            .collect())
    }
}

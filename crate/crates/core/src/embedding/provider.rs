use super::{EmbeddingError, EmbeddingVector};
use crate::nn::EMBEDDING_DIM;
use async_trait::async_trait;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;
use sha2::{Digest, Sha256};

pub const EMBED_API_KEY_ENV: &str = "PEACE_EMBED_API_KEY";
pub const DEFAULT_EMBED_MODEL: &str = "text-embedding-3-small";

/// One provider round trip for one text. Retries and caching live in the
/// gateway.
#[async_trait]
pub trait EmbeddingProvider: Send + Sync {
    fn model_id(&self) -> &str;
    async fn embed(&self, text: &str) -> Result<Vec<f64>, EmbeddingError>;
}

/// Deterministic unit-norm pseudo-random vector keyed by SHA-256 of `text`.
pub fn stub_embed(text: &str) -> EmbeddingVector {
    let seed: [u8; 32] = Sha256::digest(text.as_bytes()).into();
    let mut rng = ChaCha8Rng::from_seed(seed);
    let mut v: Vec<f64> = (0..EMBEDDING_DIM).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    EmbeddingVector::new(v).expect("stub vectors are well-formed")
}

#[derive(Debug, Clone)]
pub struct StubEmbeddingProvider {
    model_id: String,
}

impl Default for StubEmbeddingProvider {
    fn default() -> Self {
        StubEmbeddingProvider {
            model_id: "stub".into(),
        }
    }
}

#[async_trait]
impl EmbeddingProvider for StubEmbeddingProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    async fn embed(&self, text: &str) -> Result<Vec<f64>, EmbeddingError> {
        Ok(stub_embed(text).into_inner())
    }
}

/// OpenAI-compatible `POST {base_url}/embeddings` client.
pub struct HttpEmbeddingProvider {
    client: reqwest::Client,
    base_url: String,
    api_key: String,
    model_id: String,
}

#[derive(Deserialize)]
struct EmbeddingsResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

impl HttpEmbeddingProvider {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>, model_id: impl Into<String>) -> Self {
        HttpEmbeddingProvider {
            client: reqwest::Client::new(),
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            model_id: model_id.into(),
        }
    }

    /// Reads the key from [`EMBED_API_KEY_ENV`].
    pub fn from_env(base_url: impl Into<String>, model_id: impl Into<String>) -> Result<Self, EmbeddingError> {
        let key = std::env::var(EMBED_API_KEY_ENV)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| EmbeddingError::MissingCredentials(EMBED_API_KEY_ENV.into()))?;
        Ok(Self::new(base_url, key, model_id))
    }
}

#[async_trait]
impl EmbeddingProvider for HttpEmbeddingProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    async fn embed(&self, text: &str) -> Result<Vec<f64>, EmbeddingError> {
        let resp = self
            .client
            .post(format!("{}/embeddings", self.base_url))
            .bearer_auth(&self.api_key)
            .json(&serde_json::json!({"model": self.model_id, "input": text}))
            .send()
            .await
            .map_err(|e| EmbeddingError::Provider {
                message: e.to_string(),
                retryable: true,
            })?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().await.unwrap_or_default();
            return Err(EmbeddingError::Provider {
                message: format!("status {status}: {}", body.chars().take(200).collect::<String>()),
                retryable: status.is_server_error() || status.as_u16() == 429,
            });
        }
        let parsed: EmbeddingsResponse = resp.json().await.map_err(|e| EmbeddingError::Provider {
            message: format!("malformed response: {e}"),
            retryable: false,
        })?;
        parsed
            .data
            .into_iter()
            .next()
            .map(|d| d.embedding)
            .ok_or_else(|| EmbeddingError::Provider {
                message: "response holds no embedding".into(),
                retryable: false,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stub_properties() {
        assert_eq!(stub_embed("a"), stub_embed("a"));
        assert_ne!(stub_embed("a"), stub_embed("b"));
        for t in ["a", "", "peace \u{1f54a}"] {
            let v = stub_embed(t);
            assert_eq!(v.as_slice().len(), 1536);
            assert!((v.norm() - 1.0).abs() < 1e-9);
        }
    }
}

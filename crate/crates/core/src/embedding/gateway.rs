use super::cache::{content_hash, EmbeddingCache};
use super::{EmbeddingError, EmbeddingProvider, EmbeddingVector};
use crate::retry::{with_retry, RetryPolicy};
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::sync::Arc;

/// Character budget applied before embedding. The default provider accepts
/// 8191 tokens; 4 characters per token leaves margin for dense text.
pub const DEFAULT_MAX_CHARS: usize = 30_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRequest {
    pub text_id: String,
    pub text: String,
}

impl EmbeddingRequest {
    pub fn new(text_id: impl Into<String>, text: impl Into<String>) -> Self {
        EmbeddingRequest {
            text_id: text_id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Default)]
pub struct BatchResult {
    pub vectors: HashMap<String, EmbeddingVector>,
    pub errors: HashMap<String, EmbeddingError>,
}

/// Cached, retrying front end over an [`EmbeddingProvider`].
pub struct EmbeddingGateway {
    provider: Arc<dyn EmbeddingProvider>,
    cache: EmbeddingCache,
    retry: RetryPolicy,
    max_chars: usize,
}

impl EmbeddingGateway {
    pub fn new(provider: Arc<dyn EmbeddingProvider>, cache: EmbeddingCache) -> Self {
        EmbeddingGateway {
            provider,
            cache,
            retry: RetryPolicy::default(),
            max_chars: DEFAULT_MAX_CHARS,
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_max_chars(mut self, max_chars: usize) -> Self {
        self.max_chars = max_chars.max(1);
        self
    }

    pub fn model_id(&self) -> &str {
        self.provider.model_id()
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }

    /// Cache hit, or one (retried) provider call whose result is cached
    /// before returning. The cache key covers the full, untruncated text.
    pub async fn embed_text(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        if text.trim().is_empty() {
            return Err(EmbeddingError::EmptyText);
        }
        let digest = content_hash(self.model_id(), text);
        if let Some(hit) = self.cache.get(&digest) {
            return Ok(hit.vector);
        }
        let sent = match text.char_indices().nth(self.max_chars) {
            Some((cut, _)) => {
                tracing::info!(chars = text.chars().count(), budget = self.max_chars, "truncating text before embedding");
                &text[..cut]
            }
            None => text,
        };
        let raw = with_retry(&self.retry, EmbeddingError::is_retryable, |_| self.provider.embed(sent)).await?;
        let vector = EmbeddingVector::new(raw)?;
        self.cache.insert(digest, vector.clone())?;
        Ok(vector)
    }

    /// Embed many texts with at most `max_in_flight` concurrent provider
    /// calls. Identical texts share one call; failures are reported per id.
    pub async fn embed_batch(
        &self,
        requests: &[EmbeddingRequest],
        max_in_flight: usize,
    ) -> Result<BatchResult, EmbeddingError> {
        if max_in_flight == 0 {
            return Err(EmbeddingError::InvalidConfig("max_in_flight must be at least 1".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = requests.iter().find(|r| !seen.insert(r.text_id.as_str())) {
            return Err(EmbeddingError::DuplicateId(dup.text_id.clone()));
        }
        let mut groups: HashMap<[u8; 32], (String, Vec<String>)> = HashMap::new();
        for r in requests {
            groups
                .entry(content_hash(self.model_id(), &r.text))
                .or_insert_with(|| (r.text.clone(), Vec::new()))
                .1
                .push(r.text_id.clone());
        }
        // owned groups keep the future Send for any caller lifetime
        let outcomes: Vec<(Vec<String>, Result<EmbeddingVector, EmbeddingError>)> = stream::iter(groups.into_values())
            .map(|(text, ids)| async move {
                let out = self.embed_text(&text).await;
                (ids, out)
            })
            .buffer_unordered(max_in_flight)
            .collect()
            .await;
        let mut result = BatchResult::default();
        for (ids, outcome) in outcomes {
            for id in ids {
                match &outcome {
                    Ok(v) => {
                        result.vectors.insert(id, v.clone());
                    }
                    Err(e) => {
                        result.errors.insert(id, e.clone());
                    }
                }
            }
        }
        Ok(result)
    }
}

//! 1536-dimensional text embeddings: provider clients, a persistent
//! content-addressed cache and a deterministic offline stub.

mod cache;
mod gateway;
mod provider;

pub use cache::{content_hash, EmbeddingCache, CacheEntry, RECORD_LEN};
pub use gateway::{BatchResult, EmbeddingGateway, EmbeddingRequest, DEFAULT_MAX_CHARS};
pub use provider::{
    stub_embed, EmbeddingProvider, HttpEmbeddingProvider, StubEmbeddingProvider, DEFAULT_EMBED_MODEL,
    EMBED_API_KEY_ENV,
};

use crate::nn::EMBEDDING_DIM;
use serde::{Deserialize, Serialize};

/// A validated embedding: exactly [`EMBEDDING_DIM`] finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if values.len() != EMBEDDING_DIM {
            return Err(EmbeddingError::DimensionMismatch {
                expected: EMBEDDING_DIM,
                got: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(EmbeddingError::Provider {
                message: "embedding contains non-finite values".into(),
                retryable: false,
            });
        }
        Ok(EmbeddingVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = EmbeddingError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        EmbeddingVector::new(v)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("embedding has {got} values, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("missing credentials: set {0}")]
    MissingCredentials(String),
    #[error("embedding provider failed: {message}")]
    Provider { message: String, retryable: bool },
    #[error("text is empty")]
    EmptyText,
    #[error("duplicate text_id {0:?} in batch")]
    DuplicateId(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("embedding cache: {0}")]
    Cache(String),
}

impl EmbeddingError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, EmbeddingError::Provider { retryable: true, .. })
    }
}

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use peacelens::embedding::{EmbeddingProvider, HttpEmbeddingProvider, StubEmbeddingProvider};
use peacelens::emotion::{EmotionSource, FileEmotionSource, HttpEmotionSource, StubEmotionSource};
use peacelens::retry::RetryPolicy;
use peacelens::scorer::{HttpLlmProvider, LlmProvider, MockLlmProvider, StubLlmProvider};
use std::path::PathBuf;
use std::sync::Arc;

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Stub,
    Mock,
    Live,
}

#[derive(clap::Args, Debug)]
pub struct LlmArgs {
    #[arg(long, value_enum, default_value = "stub")]
    pub provider: Backend,
    /// JSONL fixtures for `--provider mock`.
    #[arg(long)]
    pub mock_responses: Option<PathBuf>,
    #[arg(long, default_value = "gpt-4o")]
    pub llm_model: String,
    #[arg(long, default_value = DEFAULT_BASE_URL)]
    pub llm_base_url: String,
    /// Emotion source: `stub`, `live` (PEACE_EMOTION_ENDPOINT) or `file:<path>`.
    #[arg(long, default_value = "stub")]
    pub emotion: String,
    /// Prompt template file; the built-in one otherwise.
    #[arg(long)]
    pub prompt_template: Option<PathBuf>,
}

impl LlmArgs {
    pub fn llm(&self) -> Result<Arc<dyn LlmProvider>> {
        Ok(match self.provider {
            Backend::Stub => Arc::new(StubLlmProvider::default()),
            Backend::Mock => {
                let path = self.mock_responses.as_ref().context("--provider mock needs --mock-responses")?;
                Arc::new(MockLlmProvider::load(&self.llm_model, path)?)
            }
            Backend::Live => Arc::new(HttpLlmProvider::from_env(&self.llm_base_url, &self.llm_model)?),
        })
    }

    pub fn emotion(&self) -> Result<Arc<dyn EmotionSource>> {
        Ok(match self.emotion.as_str() {
            "stub" => Arc::new(StubEmotionSource),
            "live" => Arc::new(HttpEmotionSource::from_env(RetryPolicy::default())?),
            other => match other.strip_prefix("file:") {
                Some(p) => Arc::new(FileEmotionSource::load(p)?),
                None => bail!("unknown emotion source {other:?}"),
            },
        })
    }

    pub fn template(&self) -> Result<peacelens::scorer::PromptTemplate> {
        Ok(match &self.prompt_template {
            Some(p) => peacelens::scorer::PromptTemplate::load(p)?,
            None => peacelens::scorer::PromptTemplate::builtin(),
        })
    }
}

pub fn embedder(backend: Backend, model: &str, base_url: &str) -> Result<Arc<dyn EmbeddingProvider>> {
    Ok(match backend {
        Backend::Stub | Backend::Mock => Arc::new(StubEmbeddingProvider::default()),
        Backend::Live => Arc::new(HttpEmbeddingProvider::from_env(base_url, model)?),
    })
}

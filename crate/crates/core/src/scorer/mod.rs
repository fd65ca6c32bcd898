//! Five-dimension transcript scoring with an LLM: prompt templates,
//! response parsing, corrective retries and bounded-parallel batches.

mod dimension;
mod parse;
mod prompt;
mod provider;
mod rate;

pub use dimension::{DimensionScoreSet, PeaceDimension, ScoringMode};
pub use parse::{extract_json_object, parse_response, ParseError, ParsedScores};
pub use prompt::{
    build_prompt, PromptTemplate, DEFAULT_PROMPT_CHARS, EMOTION_BLOCK_END, EMOTION_BLOCK_START, TRUNCATION_NOTICE,
};
pub use provider::{
    ChatMessage, HttpLlmProvider, LlmProvider, LlmRequest, MockLlmProvider, ProviderError, StubLlmProvider,
    LLM_API_KEY_ENV,
};
pub use rate::RateLimiter;

use crate::emotion::TranscriptEmotionSummary;
use crate::retry::{with_retry, RetryPolicy};
use futures::stream::{self, StreamExt};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("dual-input scoring needs an emotion summary")]
    MissingSummary,
    #[error("prompt template: {0}")]
    Template(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("scoring failed after {} responses: {last_error}", raw_responses.len())]
    ScoringFailed {
        raw_responses: Vec<String>,
        last_error: ParseError,
    },
    #[error("batch is empty")]
    EmptyBatch,
}

#[derive(Debug, Clone)]
pub struct ScorerConfig {
    pub max_chars: usize,
    /// Re-prompts after a malformed reply.
    pub corrective_retries: usize,
    pub temperature: f64,
    pub max_parallel: usize,
    pub transport_retry: RetryPolicy,
    pub rate_limiter: Option<Arc<RateLimiter>>,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            max_chars: DEFAULT_PROMPT_CHARS,
            corrective_retries: 2,
            temperature: 0.0,
            max_parallel: 4,
            transport_retry: RetryPolicy::default(),
            rate_limiter: None,
        }
    }
}

/// One transcript to score.
#[derive(Debug, Clone)]
pub struct ScoreJob {
    pub transcript_id: String,
    pub transcript: String,
    pub mode: ScoringMode,
    pub summary: Option<TranscriptEmotionSummary>,
}

impl ScoreJob {
    pub fn text_only(id: impl Into<String>, transcript: impl Into<String>) -> Self {
        ScoreJob {
            transcript_id: id.into(),
            transcript: transcript.into(),
            mode: ScoringMode::TextOnly,
            summary: None,
        }
    }
}

fn corrective_message(err: &ParseError) -> String {
    format!(
        "Your previous reply could not be used: {err}. Reply again with only one JSON object holding \
         integer scores from 1 to 5 for compassion_contempt, news_opinion, prevention_promotion, \
         order_creativity and nuance_simplistic."
    )
}

/// Score one transcript. Malformed replies trigger up to
/// `config.corrective_retries` re-prompts quoting the format error.
pub async fn score_transcript(
    job: &ScoreJob,
    provider: &dyn LlmProvider,
    template: &PromptTemplate,
    config: &ScorerConfig,
) -> Result<DimensionScoreSet, ScoreError> {
    let prompt = build_prompt(&job.transcript, template, job.mode, job.summary.as_ref(), config.max_chars)?;
    let mut request = LlmRequest {
        transcript_id: job.transcript_id.clone(),
        messages: vec![ChatMessage::user(prompt)],
        temperature: config.temperature,
    };
    let mut raw_responses = Vec::new();
    loop {
        if let Some(rl) = &config.rate_limiter {
            rl.acquire().await;
        }
        let raw = with_retry(&config.transport_retry, ProviderError::is_retryable, |_| {
            provider.complete(&request)
        })
        .await?;
        match parse_response(&raw) {
            Ok(parsed) => {
                return Ok(DimensionScoreSet {
                    scores: parsed.iter().map(|(d, (s, _))| (*d, *s)).collect(),
                    rationales: parsed.into_iter().map(|(d, (_, r))| (d, r)).collect(),
                    prompt_version: template.version.clone(),
                    model_id: provider.model_id().to_string(),
                    mode: job.mode,
                });
            }
            Err(e) => {
                tracing::warn!(transcript = %job.transcript_id, error = %e, "malformed scoring reply");
                raw_responses.push(raw.clone());
                if raw_responses.len() > config.corrective_retries {
                    return Err(ScoreError::ScoringFailed {
                        raw_responses,
                        last_error: e,
                    });
                }
                request.messages.push(ChatMessage::assistant(raw));
                request.messages.push(ChatMessage::user(corrective_message(&e)));
            }
        }
    }
}

/// Score many transcripts with at most `config.max_parallel` in flight.
/// Results come back in input order; one failure does not stop the rest.
pub async fn batch_score(
    jobs: &[ScoreJob],
    provider: &dyn LlmProvider,
    template: &PromptTemplate,
    config: &ScorerConfig,
) -> Result<Vec<Result<DimensionScoreSet, ScoreError>>, ScoreError> {
    if jobs.is_empty() {
        return Err(ScoreError::EmptyBatch);
    }
    Ok(stream::iter(jobs)
        .map(|job| score_transcript(job, provider, template, config))
        .buffered(config.max_parallel.max(1))
        .collect()
        .await)
}

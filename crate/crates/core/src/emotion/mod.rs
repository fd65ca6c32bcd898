//! Transcript chunking, emotion profiles, valence mapping and the
//! transcript-level summary (mean, volatility, neutrality share).

mod categories;
mod chunk;
mod profile;
mod source;

pub use categories::{category_index, ValenceWeights, EMOTION_CATEGORIES, NEUTRAL_INDEX};
pub use chunk::chunk_transcript;
pub use profile::{
    map_valence, summarize, summarize_profiles, EmotionProfile, TranscriptEmotionSummary, VALENCE_EPSILON,
};
pub use source::{
    fetch_profiles, EmotionSource, FileEmotionSource, HttpEmotionSource, StubEmotionSource, EMOTION_ENDPOINT_ENV,
};

#[derive(Debug, thiserror::Error)]
pub enum EmotionError {
    #[error("transcript is empty")]
    EmptyTranscript,
    #[error("emotion schema error: {0}")]
    Schema(String),
    #[error("emotion endpoint failed: {message}")]
    Endpoint { message: String, retryable: bool },
    #[error("emotion config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EmotionError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, EmotionError::Endpoint { retryable: true, .. })
    }
}

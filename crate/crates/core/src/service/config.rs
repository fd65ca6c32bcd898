use super::ServiceError;
use crate::scorer::ScoringMode;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const MODE_ENV: &str = "PEACE_MODE";
pub const DEFAULT_MAX_TRANSCRIPT_CHARS: usize = 200_000;

/// Where provider calls go. Stub and mock never touch the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ServiceMode {
    Live,
    #[default]
    Stub,
    /// LLM replies from a fixture file keyed by video id; the rest is stubbed.
    Mock,
}

impl FromStr for ServiceMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(ServiceMode::Live),
            "stub" => Ok(ServiceMode::Stub),
            "mock" => Ok(ServiceMode::Mock),
            other => Err(format!("unknown mode {other:?} (live | stub | mock)")),
        }
    }
}

/// Service settings. Credentials are never read from the file, only from
/// `PEACE_EMBED_API_KEY` and `PEACE_LLM_API_KEY` in live mode.
///
/// File format: one `key = value` per line, `#` starts a comment.
///
/// | key | default |
/// |-----|---------|
/// | `bind` | `127.0.0.1:8787` |
/// | `mode` | `stub` (overridden by `PEACE_MODE`) |
/// | `scoring_mode` | `dual_input` |
/// | `checkpoint` | none; `/v1/classify` answers 409 without it |
/// | `store_path` | none (in-memory history) |
/// | `embed_cache_path` | none (in-memory cache) |
/// | `embed_base_url`, `embed_model` | `https://api.openai.com/v1`, `text-embedding-3-small` |
/// | `llm_base_url`, `llm_model` | `https://api.openai.com/v1`, `gpt-4o` |
/// | `emotion_endpoint` | none (overridden by `PEACE_EMOTION_ENDPOINT`) |
/// | `mock_responses` | JSONL fixture file, required in mock mode |
/// | `prompt_template` | built-in template |
/// | `valence_weights` | built-in table |
/// | `llm_requests_per_minute` | unlimited |
/// | `score_requests_per_minute` | unlimited; excess uncached requests get 429 |
/// | `max_transcript_chars` | 200000 |
/// | `cors_origins` | `chrome-extension://,moz-extension://,http://localhost,http://127.0.0.1` (prefixes) |
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub mode: ServiceMode,
    pub scoring_mode: ScoringMode,
    pub checkpoint: Option<PathBuf>,
    pub store_path: Option<PathBuf>,
    pub embed_cache_path: Option<PathBuf>,
    pub embed_base_url: String,
    pub embed_model: String,
    pub llm_base_url: String,
    pub llm_model: String,
    pub emotion_endpoint: Option<String>,
    pub mock_responses: Option<PathBuf>,
    pub prompt_template: Option<PathBuf>,
    pub valence_weights: Option<PathBuf>,
    pub llm_requests_per_minute: Option<u32>,
    pub score_requests_per_minute: Option<u32>,
    pub max_transcript_chars: usize,
    pub cors_origins: Vec<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8787)),
            mode: ServiceMode::Stub,
            scoring_mode: ScoringMode::DualInput,
            checkpoint: None,
            store_path: None,
            embed_cache_path: None,
            embed_base_url: "https://api.openai.com/v1".into(),
            embed_model: crate::embedding::DEFAULT_EMBED_MODEL.into(),
            llm_base_url: "https://api.openai.com/v1".into(),
            llm_model: "gpt-4o".into(),
            emotion_endpoint: None,
            mock_responses: None,
            prompt_template: None,
            valence_weights: None,
            llm_requests_per_minute: None,
            score_requests_per_minute: None,
            max_transcript_chars: DEFAULT_MAX_TRANSCRIPT_CHARS,
            cors_origins: ["chrome-extension://", "moz-extension://", "http://localhost", "http://127.0.0.1"]
                .map(String::from)
                .to_vec(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ServiceError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| ServiceError::Config(format!("{key}: {e}")))
}

impl ServiceConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ServiceError> {
        let path = || Some(PathBuf::from(value));
        match key {
            "bind" => self.bind = parse(key, value)?,
            "mode" => self.mode = parse(key, value)?,
            "scoring_mode" => self.scoring_mode = parse(key, value)?,
            "checkpoint" => self.checkpoint = path(),
            "store_path" => self.store_path = path(),
            "embed_cache_path" => self.embed_cache_path = path(),
            "embed_base_url" => self.embed_base_url = value.into(),
            "embed_model" => self.embed_model = value.into(),
            "llm_base_url" => self.llm_base_url = value.into(),
            "llm_model" => self.llm_model = value.into(),
            "emotion_endpoint" => self.emotion_endpoint = Some(value.into()),
            "mock_responses" => self.mock_responses = path(),
            "prompt_template" => self.prompt_template = path(),
            "valence_weights" => self.valence_weights = path(),
            "llm_requests_per_minute" => self.llm_requests_per_minute = Some(parse(key, value)?),
            "score_requests_per_minute" => self.score_requests_per_minute = Some(parse(key, value)?),
            "max_transcript_chars" => self.max_transcript_chars = parse(key, value)?,
            "cors_origins" => {
                self.cors_origins = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            _ => return Err(ServiceError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ServiceError> {
        let mut cfg = ServiceConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ServiceError::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| ServiceError::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    /// Apply `PEACE_MODE` and `PEACE_EMOTION_ENDPOINT` when set.
    pub fn apply_env(&mut self) -> Result<(), ServiceError> {
        self.apply_vars(|k| std::env::var(k).ok())
    }

    pub fn apply_vars(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ServiceError> {
        if let Some(m) = get(MODE_ENV) {
            self.mode = parse(MODE_ENV, &m)?;
        }
        if let Some(e) = get(crate::emotion::EMOTION_ENDPOINT_ENV) {
            self.emotion_endpoint = Some(e);
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.max_transcript_chars == 0 {
            return Err(ServiceError::Config("max_transcript_chars must be positive".into()));
        }
        if self.llm_requests_per_minute == Some(0) || self.score_requests_per_minute == Some(0) {
            return Err(ServiceError::Config("rate limits must be positive".into()));
        }
        if self.mode == ServiceMode::Mock && self.mock_responses.is_none() {
            return Err(ServiceError::Config("mock mode needs mock_responses".into()));
        }
        Ok(())
    }
}

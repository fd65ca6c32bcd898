use super::config::{ServiceConfig, ServiceMode};
use super::store::{transcript_digest, ScoreRecord, ScoreStore};
use super::ServiceError;
use crate::embedding::{
    EmbeddingCache, EmbeddingError, EmbeddingGateway, EmbeddingProvider, EmbeddingRequest, HttpEmbeddingProvider,
    StubEmbeddingProvider,
};
use crate::emotion::{
    chunk_transcript, fetch_profiles, summarize_profiles, EmotionError, EmotionSource, HttpEmotionSource,
    StubEmotionSource, ValenceWeights,
};
use crate::eval::{country_level_classify, group_by_country, CountryPrediction};
use crate::nn::{load_checkpoint, Model};
use crate::retry::RetryPolicy;
use crate::scorer::{
    score_transcript, HttpLlmProvider, LlmProvider, MockLlmProvider, PromptTemplate, ProviderError, RateLimiter,
    ScoreError, ScoreJob, ScorerConfig, ScoringMode, StubLlmProvider,
};
use crate::PeaceLabel;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use tokio::time::Instant;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub const API_VERSION: &str = "v1";
const DEFAULT_PAGE: usize = 50;
const MAX_PAGE: usize = 500;
const EMBED_IN_FLIGHT: usize = 8;

/// The three external dependencies, swappable for test doubles.
#[derive(Clone)]
pub struct Providers {
    pub llm: Arc<dyn LlmProvider>,
    pub emotion: Arc<dyn EmotionSource>,
    pub embed: Arc<dyn EmbeddingProvider>,
}

impl Providers {
    pub fn stub() -> Self {
        Providers {
            llm: Arc::new(StubLlmProvider::default()),
            emotion: Arc::new(StubEmotionSource),
            embed: Arc::new(StubEmbeddingProvider::default()),
        }
    }

    pub fn from_config(cfg: &ServiceConfig) -> Result<Self, ServiceError> {
        let startup = |e: String| ServiceError::Startup(e);
        match cfg.mode {
            ServiceMode::Stub => Ok(Self::stub()),
            ServiceMode::Mock => {
                let path = cfg.mock_responses.as_ref().ok_or_else(|| startup("mock mode needs mock_responses".into()))?;
                Ok(Providers {
                    llm: Arc::new(MockLlmProvider::load(&cfg.llm_model, path).map_err(|e| startup(e.to_string()))?),
                    ..Self::stub()
                })
            }
            ServiceMode::Live => {
                let endpoint = cfg
                    .emotion_endpoint
                    .clone()
                    .ok_or_else(|| startup("live mode needs emotion_endpoint".into()))?;
                Ok(Providers {
                    llm: Arc::new(
                        HttpLlmProvider::from_env(&cfg.llm_base_url, &cfg.llm_model).map_err(|e| startup(e.to_string()))?,
                    ),
                    emotion: Arc::new(HttpEmotionSource::new(endpoint, RetryPolicy::default())),
                    embed: Arc::new(
                        HttpEmbeddingProvider::from_env(&cfg.embed_base_url, &cfg.embed_model)
                            .map_err(|e| startup(e.to_string()))?,
                    ),
                })
            }
        }
    }
}

/// Token bucket for uncached score requests.
struct Budget {
    per_minute: f64,
    state: Mutex<(f64, Instant)>,
}

impl Budget {
    fn new(per_minute: u32) -> Self {
        Budget {
            per_minute: per_minute as f64,
            state: Mutex::new((per_minute as f64, Instant::now())),
        }
    }

    /// Seconds until a token is available, or `None` after taking one.
    fn try_take(&self) -> Option<f64> {
        let mut s = self.state.lock();
        let now = Instant::now();
        let refill = now.duration_since(s.1).as_secs_f64() * self.per_minute / 60.0;
        s.0 = (s.0 + refill).min(self.per_minute);
        s.1 = now;
        if s.0 >= 1.0 {
            s.0 -= 1.0;
            None
        } else {
            Some((1.0 - s.0) * 60.0 / self.per_minute)
        }
    }
}

pub struct AppState {
    config: ServiceConfig,
    providers: Providers,
    store: ScoreStore,
    gateway: EmbeddingGateway,
    model: Option<Model>,
    template: PromptTemplate,
    weights: ValenceWeights,
    scorer: ScorerConfig,
    budget: Option<Budget>,
    in_flight: Mutex<HashMap<(String, String), Arc<tokio::sync::Mutex<()>>>>,
}

impl AppState {
    pub fn from_config(config: ServiceConfig) -> Result<Arc<Self>, ServiceError> {
        let providers = Providers::from_config(&config)?;
        Self::with_providers(config, providers)
    }

    /// Build with explicit providers; `config.mode` is then informational.
    pub fn with_providers(config: ServiceConfig, providers: Providers) -> Result<Arc<Self>, ServiceError> {
        config.validate()?;
        let startup = |e: String| ServiceError::Startup(e);
        let store = match &config.store_path {
            Some(p) => ScoreStore::open(p)?,
            None => ScoreStore::in_memory(),
        };
        let cache = match &config.embed_cache_path {
            Some(p) => EmbeddingCache::open(p).map_err(|e| startup(e.to_string()))?,
            None => EmbeddingCache::in_memory(),
        };
        let model = match &config.checkpoint {
            Some(p) => Some(load_checkpoint(p).map_err(|e| startup(format!("{}: {e}", p.display())))?),
            None => None,
        };
        let template = match &config.prompt_template {
            Some(p) => PromptTemplate::load(p).map_err(|e| startup(e.to_string()))?,
            None => PromptTemplate::builtin(),
        };
        let weights = match &config.valence_weights {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| e.to_string())
                .and_then(|t| ValenceWeights::from_json(&t))
                .map_err(|e| startup(format!("{}: {e}", p.display())))?,
            None => ValenceWeights::default(),
        };
        let scorer = ScorerConfig {
            rate_limiter: config.llm_requests_per_minute.map(|n| Arc::new(RateLimiter::per_minute(n))),
            ..ScorerConfig::default()
        };
        Ok(Arc::new(AppState {
            gateway: EmbeddingGateway::new(providers.embed.clone(), cache),
            budget: config.score_requests_per_minute.map(Budget::new),
            config,
            providers,
            store,
            model,
            template,
            weights,
            scorer,
            in_flight: Mutex::new(HashMap::new()),
        }))
    }

    pub fn store(&self) -> &ScoreStore {
        &self.store
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }
}

/// Error body shared by every endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error_kind: String,
    pub message: String,
    pub retryable: bool,
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, message: impl Into<String>, retryable: bool) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error_kind: kind.into(),
                message: message.into(),
                retryable,
            },
        }
    }

    fn bad_request(kind: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, kind, message, false)
    }

    fn upstream(kind: &str, message: impl Into<String>, retryable: bool) -> Self {
        Self::new(StatusCode::BAD_GATEWAY, kind, message, retryable)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        if r.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::bad_request("transcript_too_large", r.body_text())
        } else {
            ApiError::bad_request("invalid_request", r.body_text())
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::bad_request("invalid_request", r.body_text())
    }
}

impl From<ScoreError> for ApiError {
    fn from(e: ScoreError) -> Self {
        match &e {
            ScoreError::Provider(p) => {
                let kind = match p {
                    ProviderError::MissingCredentials(_) => "missing_credentials",
                    ProviderError::UnknownFixture(_) | ProviderError::Fixture(_) => "mock_fixture",
                    ProviderError::Transport { .. } => "provider_failed",
                };
                ApiError::upstream(kind, e.to_string(), p.is_retryable())
            }
            ScoreError::ScoringFailed { .. } => ApiError::upstream("scoring_failed", e.to_string(), true),
            ScoreError::MissingSummary | ScoreError::Template(_) | ScoreError::EmptyBatch => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string(), false)
            }
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "persistence_failed", e.to_string(), true)
    }
}

fn emotion_error(e: EmotionError) -> ApiError {
    match e {
        EmotionError::EmptyTranscript => ApiError::bad_request("empty_transcript", e.to_string()),
        other => ApiError::upstream("emotion_failed", other.to_string(), other.is_retryable()),
    }
}

fn embedding_error(e: &EmbeddingError) -> ApiError {
    ApiError::upstream("embedding_failed", e.to_string(), e.is_retryable())
}

#[derive(Debug, Deserialize)]
pub struct ScoreRequest {
    pub video_id: String,
    pub transcript: String,
    #[serde(default)]
    pub mode: Option<ScoringMode>,
}

async fn handle_score(
    State(app): State<Arc<AppState>>,
    body: Result<Json<ScoreRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body?;
    if req.video_id.trim().is_empty() {
        return Err(ApiError::bad_request("invalid_request", "video_id is empty"));
    }
    if req.transcript.trim().is_empty() {
        return Err(ApiError::bad_request("empty_transcript", "transcript is empty"));
    }
    let chars = req.transcript.chars().count();
    if chars > app.config.max_transcript_chars {
        return Err(ApiError::bad_request(
            "transcript_too_large",
            format!("transcript has {chars} characters, limit {}", app.config.max_transcript_chars),
        ));
    }
    let digest = transcript_digest(&req.transcript);
    if let Some(rec) = app.store.get(&req.video_id, &digest) {
        return Ok(cached(&rec, true));
    }
    let key = (req.video_id.clone(), digest.clone());
    let gate = app.in_flight.lock().entry(key.clone()).or_default().clone();
    let _held = gate.lock().await;
    let result = score_uncached(&app, &req, digest).await;
    app.in_flight.lock().remove(&key);
    result
}

fn cached(rec: &ScoreRecord, hit: bool) -> Response {
    let mut resp = Json(rec).into_response();
    resp.headers_mut()
        .insert("x-peace-cache", HeaderValue::from_static(if hit { "hit" } else { "miss" }));
    resp
}

async fn score_uncached(app: &AppState, req: &ScoreRequest, digest: String) -> Result<Response, ApiError> {
    // a concurrent identical request may have finished while we waited
    if let Some(rec) = app.store.get(&req.video_id, &digest) {
        return Ok(cached(&rec, true));
    }
    if let Some(wait) = app.budget.as_ref().and_then(Budget::try_take) {
        return Err(ApiError::new(
            StatusCode::TOO_MANY_REQUESTS,
            "rate_limited",
            format!("score budget exhausted, retry in {wait:.1}s"),
            true,
        ));
    }
    let chunks = chunk_transcript(&req.transcript).map_err(emotion_error)?;
    let profiles = fetch_profiles(&chunks, app.providers.emotion.as_ref())
        .await
        .map_err(emotion_error)?;
    let summary = summarize_profiles(&profiles, &app.weights).map_err(emotion_error)?;
    let job = ScoreJob {
        transcript_id: req.video_id.clone(),
        transcript: req.transcript.clone(),
        mode: req.mode.unwrap_or(app.config.scoring_mode),
        summary: Some(summary.clone()),
    };
    let scores = score_transcript(&job, app.providers.llm.as_ref(), &app.template, &app.scorer).await?;
    let news_probability = match &app.model {
        Some(model) => match app.gateway.embed_text(&req.transcript).await {
            Ok(v) => model.predict(v.as_slice()).ok(),
            Err(e) => {
                tracing::warn!(video = %req.video_id, error = %e, "news classifier skipped");
                None
            }
        },
        None => None,
    };
    let rec = app.store.put(ScoreRecord {
        video_id: req.video_id.clone(),
        scored_at: chrono::Utc::now(),
        transcript_digest: digest,
        scores: Some(scores),
        emotion: Some(summary),
        news_probability,
    })?;
    Ok(cached(&rec, false))
}

#[derive(Debug, Deserialize)]
pub struct ClassifyRequest {
    pub texts: Vec<String>,
    /// Parallel to `texts`; enables per-country aggregation.
    #[serde(default)]
    pub countries: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TextPrediction {
    pub probability: f64,
    pub label: PeaceLabel,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub architecture: String,
    pub predictions: Vec<TextPrediction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub countries: Option<BTreeMap<String, CountryPrediction>>,
}

async fn handle_classify(
    State(app): State<Arc<AppState>>,
    body: Result<Json<ClassifyRequest>, JsonRejection>,
) -> Result<Json<ClassifyResponse>, ApiError> {
    let Some(model) = &app.model else {
        return Err(ApiError::new(StatusCode::CONFLICT, "no_checkpoint", "no classifier checkpoint loaded", false));
    };
    let Json(req) = body?;
    if req.texts.is_empty() {
        return Err(ApiError::bad_request("invalid_request", "texts is empty"));
    }
    if let Some(c) = &req.countries {
        if c.len() != req.texts.len() {
            return Err(ApiError::bad_request(
                "invalid_request",
                format!("{} countries for {} texts", c.len(), req.texts.len()),
            ));
        }
    }
    let requests: Vec<_> = req
        .texts
        .iter()
        .enumerate()
        .map(|(i, t)| EmbeddingRequest::new(i.to_string(), t.clone()))
        .collect();
    let batch = app
        .gateway
        .embed_batch(&requests, EMBED_IN_FLIGHT)
        .await
        .map_err(|e| embedding_error(&e))?;
    if let Some((id, e)) = batch.errors.iter().min_by_key(|(id, _)| id.parse::<usize>().unwrap_or(usize::MAX)) {
        let mut err = embedding_error(e);
        err.body.message = format!("text {id}: {}", err.body.message);
        return Err(err);
    }
    let mut predictions = Vec::with_capacity(req.texts.len());
    for r in &requests {
        let (probability, label) = model
            .classify(batch.vectors[&r.text_id].as_slice())
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "classifier_failed", e.to_string(), false))?;
        predictions.push(TextPrediction { probability, label });
    }
    let countries = match &req.countries {
        Some(c) => {
            let grouped = group_by_country(c.iter().map(String::as_str).zip(predictions.iter().map(|p| p.probability)));
            Some(country_level_classify(&grouped).map_err(|e| ApiError::bad_request("invalid_request", e.to_string()))?)
        }
        None => None,
    };
    Ok(Json(ClassifyResponse {
        architecture: model.spec().architecture().map_or("custom".into(), |a| a.to_string()),
        predictions,
        countries,
    }))
}

#[derive(Debug, Deserialize)]
pub struct HistoryQuery {
    pub video_id: Option<String>,
    #[serde(default)]
    pub offset: usize,
    pub limit: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HistoryPage {
    pub records: Vec<ScoreRecord>,
    pub total: usize,
    pub next_offset: Option<usize>,
}

async fn handle_history(
    State(app): State<Arc<AppState>>,
    query: Result<Query<HistoryQuery>, QueryRejection>,
) -> Result<Json<HistoryPage>, ApiError> {
    let Query(q) = query?;
    let limit = q.limit.unwrap_or(DEFAULT_PAGE);
    if limit == 0 || limit > MAX_PAGE {
        return Err(ApiError::bad_request("invalid_request", format!("limit must be in 1..={MAX_PAGE}")));
    }
    let (page, total) = app.store.history(q.video_id.as_deref(), q.offset, limit);
    let end = q.offset.saturating_add(page.len());
    Ok(Json(HistoryPage {
        records: page.iter().map(|r| (**r).clone()).collect(),
        total,
        next_offset: (end < total).then_some(end),
    }))
}

async fn healthz() -> &'static str {
    "ok"
}

fn cors(origins: &[String]) -> CorsLayer {
    let prefixes = origins.to_vec();
    CorsLayer::new()
        .allow_origin(AllowOrigin::predicate(move |origin: &HeaderValue, _| {
            let o = origin.as_bytes();
            prefixes.iter().any(|p| o.starts_with(p.as_bytes()))
        }))
        .allow_methods([Method::GET, Method::POST, Method::OPTIONS])
        .allow_headers([header::CONTENT_TYPE])
}

pub fn router(app: Arc<AppState>) -> Router {
    // room for the largest allowed transcript in 4-byte UTF-8 plus JSON overhead
    let body_limit = app.config.max_transcript_chars * 4 + (64 << 10);
    Router::new()
        .route("/v1/score", post(handle_score))
        .route("/v1/classify", post(handle_classify))
        .route("/v1/history", get(handle_history))
        .route("/healthz", get(healthz))
        .layer(DefaultBodyLimit::max(body_limit))
        .layer(cors(&app.config.cors_origins))
        .with_state(app)
}

/// Bind and serve until ctrl-c.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let bind = config.bind;
    let app = AppState::from_config(config)?;
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|e| ServiceError::Startup(format!("{bind}: {e}")))?;
    tracing::info!(addr = %bind, mode = ?app.config.mode, "listening");
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| ServiceError::Startup(e.to_string()))
}

//! HTTP API for the browser extension and batch classification.

mod api;
mod config;
mod store;

pub use api::{router, serve, AppState, Providers, API_VERSION};
pub use config::{ServiceConfig, ServiceMode, DEFAULT_MAX_TRANSCRIPT_CHARS, MODE_ENV};
pub use store::{transcript_digest, ScoreRecord, ScoreStore};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("config: {0}")]
    Config(String),
    #[error("store: {0}")]
    Store(String),
    #[error("startup: {0}")]
    Startup(String),
}

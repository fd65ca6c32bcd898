//! Peace-speech analysis engine.
//!
//! * [`nn`] trains and runs the high/low-peace classifiers over text embeddings.
//! * [`embedding`] fetches and caches 1536-dimensional embeddings.
//! * [`corpus`] ingests labeled corpora, splits them and generates synthetic ones.
//! * [`emotion`] maps per-sentence emotion profiles to valence and summarizes them.
//! * [`scorer`] scores transcripts on the five peace dimensions with an LLM.
//! * [`eval`] holds the measurement math: accuracy, correlation, rater statistics.
//! * [`service`] is the HTTP API consumed by the browser extension.

pub mod corpus;
pub mod embedding;
pub mod emotion;
pub mod eval;
pub mod label;
pub mod nn;
pub mod retry;
pub mod scorer;
pub mod service;

pub use label::PeaceLabel;

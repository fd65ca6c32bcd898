//! Corpus ingestion, country labelling, n-gram preprocessing, seeded splits
//! and the synthetic embedding corpus generator.

mod dataset;
mod ingest;
mod labels;
mod ngram;
mod split;
mod synthetic;

pub use dataset::{decode_dataset, encode_dataset, read_dataset, write_dataset, LabeledExample, DATASET_MAGIC, DATASET_VERSION};
pub use ingest::{ingest_jsonl, ingest_reader, Article, IngestReport, LineReject, MAX_REJECT_FRACTION};
pub use labels::{assign_labels, CountryPeaceTable, LabeledArticle};
pub use ngram::{ngram_preprocess, preprocess_multi, tokenize, DEFAULT_NGRAM_ORDERS};
pub use split::{train_test_split, SplitConfig};
pub use synthetic::{class_direction, generate_synthetic_corpus, SyntheticConfig};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        source: std::io::Error,
    },
    #[error("{rejected} of {total} lines malformed (first: line {first_line}: {first_reason})")]
    TooManyMalformed {
        rejected: usize,
        total: usize,
        first_line: usize,
        first_reason: String,
    },
    #[error("countries missing from peace table: {}", .0.join(", "))]
    UnknownCountries(Vec<String>),
    #[error("invalid peace table: {0}")]
    InvalidTable(String),
    #[error("need at least 2 examples to split, got {0}")]
    TooFewExamples(usize),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("corrupt dataset: {0}")]
    CorruptDataset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

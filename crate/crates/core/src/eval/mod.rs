//! Measurement math shared by training, scoring and the reports.

mod gold;
mod report;
mod stats;

pub use gold::{
    aggregate_gold, describe, inter_rater_reliability, median, model_vs_human, CorrelationEntry,
    DimensionStats, GoldStandard, PairReliability, ReliabilityReport, AGREEMENT_MARGIN,
};
pub use report::{correlation_csv, format_table_one, format_table_two, CountryRow, EvalReport};
pub use stats::{
    accuracy, country_level_classify, group_by_country, pearson_r, transfer_diagnostic, Confusion,
    Correlation, CountryPrediction, TransferDiagnostic, DEGENERATE_HIGH, DEGENERATE_LOW,
};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no observations")]
    Empty,
    #[error("need at least {need} observations, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("country {0} has no predictions")]
    EmptyGroup(String),
    #[error("gold standard: {0}")]
    Gold(String),
}

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// The five bipolar peace dimensions in fixed order. Score 5 is the first
/// pole of each pair, 1 the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeaceDimension {
    CompassionContempt,
    NewsOpinion,
    PreventionPromotion,
    OrderCreativity,
    NuanceSimplistic,
}

impl PeaceDimension {
    pub const ALL: [PeaceDimension; 5] = [
        PeaceDimension::CompassionContempt,
        PeaceDimension::NewsOpinion,
        PeaceDimension::PreventionPromotion,
        PeaceDimension::OrderCreativity,
        PeaceDimension::NuanceSimplistic,
    ];

    pub fn key(self) -> &'static str {
        match self {
            PeaceDimension::CompassionContempt => "compassion_contempt",
            PeaceDimension::NewsOpinion => "news_opinion",
            PeaceDimension::PreventionPromotion => "prevention_promotion",
            PeaceDimension::OrderCreativity => "order_creativity",
            PeaceDimension::NuanceSimplistic => "nuance_simplistic",
        }
    }

    /// (score-5 pole, score-1 pole)
    pub fn poles(self) -> (&'static str, &'static str) {
        match self {
            PeaceDimension::CompassionContempt => ("compassion", "contempt"),
            PeaceDimension::NewsOpinion => ("news", "opinion"),
            PeaceDimension::PreventionPromotion => ("prevention", "promotion"),
            PeaceDimension::OrderCreativity => ("order", "creativity"),
            PeaceDimension::NuanceSimplistic => ("nuance", "simplistic"),
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.key() == key)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PeaceDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl std::str::FromStr for PeaceDimension {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_key(s).ok_or_else(|| format!("unknown dimension {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    #[default]
    TextOnly,
    /// Transcript plus its emotion summary.
    DualInput,
}

impl std::str::FromStr for ScoringMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "text_only" | "text" => Ok(ScoringMode::TextOnly),
            "dual_input" | "dual" => Ok(ScoringMode::DualInput),
            other => Err(format!("unknown scoring mode {other:?}")),
        }
    }
}

/// Integer 1..=5 scores on all five dimensions, with provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionScoreSet {
    pub scores: BTreeMap<PeaceDimension, u8>,
    pub rationales: BTreeMap<PeaceDimension, String>,
    pub prompt_version: String,
    pub model_id: String,
    pub mode: ScoringMode,
}

impl DimensionScoreSet {
    pub fn score(&self, d: PeaceDimension) -> u8 {
        self.scores[&d]
    }

    /// All five present and each in 1..=5, provenance non-empty.
    pub fn is_valid(&self) -> bool {
        PeaceDimension::ALL
            .iter()
            .all(|d| self.scores.get(d).is_some_and(|s| (1..=5).contains(s)))
            && self.scores.len() == 5
            && !self.prompt_version.is_empty()
            && !self.model_id.is_empty()
    }

    pub fn as_array(&self) -> [u8; 5] {
        PeaceDimension::ALL.map(|d| self.scores[&d])
    }
}

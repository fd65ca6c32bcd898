use super::categories::{ValenceWeights, EMOTION_CATEGORIES, NEUTRAL_INDEX};
use super::EmotionError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Scores of one chunk over the 28 categories, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionProfile {
    pub chunk_id: usize,
    scores: [f64; 28],
}

/// Denominator floor of the normalized weighted mean.
pub const VALENCE_EPSILON: f64 = 1e-9;

impl EmotionProfile {
    pub fn new(chunk_id: usize, scores: [f64; 28]) -> Result<Self, EmotionError> {
        for (c, s) in EMOTION_CATEGORIES.iter().zip(scores) {
            if !(0.0..=1.0).contains(&s) {
                return Err(EmotionError::Schema(format!("{c} score {s} outside [0, 1]")));
            }
        }
        Ok(EmotionProfile { chunk_id, scores })
    }

    /// From a category-name map that must name all 28 categories and nothing else.
    pub fn from_map(chunk_id: usize, map: &BTreeMap<String, f64>) -> Result<Self, EmotionError> {
        if let Some(unknown) = map.keys().find(|k| !EMOTION_CATEGORIES.contains(&k.as_str())) {
            return Err(EmotionError::Schema(format!("unknown category {unknown:?}")));
        }
        let mut scores = [0.0; 28];
        for (i, c) in EMOTION_CATEGORIES.iter().enumerate() {
            scores[i] = *map
                .get(*c)
                .ok_or_else(|| EmotionError::Schema(format!("chunk {chunk_id}: missing category {c}")))?;
        }
        Self::new(chunk_id, scores)
    }

    /// Single-category profile, handy for fixtures.
    pub fn one_hot(chunk_id: usize, category: &str, score: f64) -> Result<Self, EmotionError> {
        let i = super::categories::category_index(category)
            .ok_or_else(|| EmotionError::Schema(format!("unknown category {category:?}")))?;
        let mut scores = [0.0; 28];
        scores[i] = score;
        Self::new(chunk_id, scores)
    }

    pub fn scores(&self) -> &[f64; 28] {
        &self.scores
    }

    pub fn score(&self, category: &str) -> Option<f64> {
        super::categories::category_index(category).map(|i| self.scores[i])
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        EMOTION_CATEGORIES
            .iter()
            .zip(self.scores)
            .map(|(c, s)| (c.to_string(), s))
            .collect()
    }

    /// Index of the highest score; ties go to the earlier category.
    pub fn dominant_index(&self) -> usize {
        let mut best = 0;
        for (i, s) in self.scores.iter().enumerate() {
            if *s > self.scores[best] {
                best = i;
            }
        }
        best
    }

    pub fn dominant(&self) -> &'static str {
        EMOTION_CATEGORIES[self.dominant_index()]
    }
}

/// Normalized weighted mean of the scores, clamped to `[-1, 1]`.
pub fn map_valence(profile: &EmotionProfile, weights: &ValenceWeights) -> f64 {
    let (num, den) = profile
        .scores
        .iter()
        .zip(weights.as_array())
        .fold((0.0, 0.0), |(n, d), (s, w)| (n + w * s, d + s));
    (num / den.max(VALENCE_EPSILON)).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEmotionSummary {
    pub chunk_valences: Vec<f64>,
    pub mean_valence: f64,
    /// Population standard deviation of the chunk valences.
    pub volatility: f64,
    pub neutrality_fraction: f64,
    pub dominant_categories: Vec<String>,
}

/// Summary statistics over a transcript's chunks. `valences[i]` must belong
/// to `profiles[i]`.
pub fn summarize(valences: &[f64], profiles: &[EmotionProfile]) -> Result<TranscriptEmotionSummary, EmotionError> {
    if valences.is_empty() {
        return Err(EmotionError::EmptyTranscript);
    }
    if valences.len() != profiles.len() {
        return Err(EmotionError::Schema(format!(
            "{} valences for {} profiles",
            valences.len(),
            profiles.len()
        )));
    }
    let n = valences.len() as f64;
    let (mean, volatility) = if valences.iter().all(|v| *v == valences[0]) {
        (valences[0], 0.0)
    } else {
        let mean = valences.iter().sum::<f64>() / n;
        let var = valences.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let neutral = profiles
        .iter()
        .filter(|p| p.dominant_index() == NEUTRAL_INDEX)
        .count();
    Ok(TranscriptEmotionSummary {
        chunk_valences: valences.to_vec(),
        mean_valence: mean,
        volatility,
        neutrality_fraction: neutral as f64 / n,
        dominant_categories: profiles.iter().map(|p| p.dominant().to_string()).collect(),
    })
}

/// Map every profile and summarize.
pub fn summarize_profiles(
    profiles: &[EmotionProfile],
    weights: &ValenceWeights,
) -> Result<TranscriptEmotionSummary, EmotionError> {
    let valences: Vec<f64> = profiles.iter().map(|p| map_valence(p, weights)).collect();
    summarize(&valences, profiles)
}

use serde::{Deserialize, Serialize};

/// The 28 GoEmotions categories in canonical order; `neutral` is last.
pub const EMOTION_CATEGORIES: [&str; 28] = [
    "admiration",
    "amusement",
    "anger",
    "annoyance",
    "approval",
    "caring",
    "confusion",
    "curiosity",
    "desire",
    "disappointment",
    "disapproval",
    "disgust",
    "embarrassment",
    "excitement",
    "fear",
    "gratitude",
    "grief",
    "joy",
    "love",
    "nervousness",
    "optimism",
    "pride",
    "realization",
    "relief",
    "remorse",
    "sadness",
    "surprise",
    "neutral",
];

pub const NEUTRAL_INDEX: usize = 27;

pub fn category_index(name: &str) -> Option<usize> {
    EMOTION_CATEGORIES.iter().position(|c| *c == name)
}

const POSITIVE: [&str; 12] = [
    "joy",
    "admiration",
    "amusement",
    "approval",
    "caring",
    "gratitude",
    "love",
    "optimism",
    "pride",
    "relief",
    "excitement",
    "desire",
];

const NEGATIVE: [&str; 10] = [
    "anger",
    "disgust",
    "annoyance",
    "disapproval",
    "disappointment",
    "embarrassment",
    "fear",
    "grief",
    "remorse",
    "sadness",
];

/// Per-category valence weights in `[-1, 1]`, indexed like
/// [`EMOTION_CATEGORIES`]. Neutral always weighs 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "std::collections::BTreeMap<String, f64>", into = "std::collections::BTreeMap<String, f64>")]
pub struct ValenceWeights {
    weights: [f64; 28],
}

impl Default for ValenceWeights {
    /// +1 for clearly positive categories, -1 for clearly negative ones and 0
    /// for neutral and epistemic ones (surprise, curiosity, realization,
    /// confusion, nervousness).
    fn default() -> Self {
        let mut weights = [0.0; 28];
        for c in POSITIVE {
            weights[category_index(c).unwrap()] = 1.0;
        }
        for c in NEGATIVE {
            weights[category_index(c).unwrap()] = -1.0;
        }
        ValenceWeights { weights }
    }
}

impl ValenceWeights {
    pub fn new(weights: [f64; 28]) -> Result<Self, String> {
        for (c, w) in EMOTION_CATEGORIES.iter().zip(weights) {
            if !(-1.0..=1.0).contains(&w) {
                return Err(format!("weight for {c} is {w}, outside [-1, 1]"));
            }
        }
        if weights[NEUTRAL_INDEX] != 0.0 {
            return Err("neutral must weigh 0".into());
        }
        Ok(ValenceWeights { weights })
    }

    pub fn as_array(&self) -> &[f64; 28] {
        &self.weights
    }

    pub fn weight(&self, category: &str) -> Option<f64> {
        category_index(category).map(|i| self.weights[i])
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}

impl TryFrom<std::collections::BTreeMap<String, f64>> for ValenceWeights {
    type Error = String;

    fn try_from(map: std::collections::BTreeMap<String, f64>) -> Result<Self, String> {
        let mut weights = [f64::NAN; 28];
        for (k, v) in &map {
            if k.starts_with('_') {
                continue;
            }
            let i = category_index(k).ok_or_else(|| format!("unknown emotion category {k:?}"))?;
            weights[i] = *v;
        }
        if let Some(i) = weights.iter().position(|w| w.is_nan()) {
            return Err(format!("missing weight for {}", EMOTION_CATEGORIES[i]));
        }
        ValenceWeights::new(weights)
    }
}

impl From<ValenceWeights> for std::collections::BTreeMap<String, f64> {
    fn from(w: ValenceWeights) -> Self {
        EMOTION_CATEGORIES
            .iter()
            .zip(w.weights)
            .map(|(c, v)| (c.to_string(), v))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_partitions_categories() {
        let w = ValenceWeights::default();
        assert_eq!(POSITIVE.len() + NEGATIVE.len() + 6, 28);
        assert_eq!(w.weight("joy"), Some(1.0));
        assert_eq!(w.weight("admiration"), Some(1.0));
        assert_eq!(w.weight("anger"), Some(-1.0));
        assert_eq!(w.weight("disgust"), Some(-1.0));
        assert_eq!(w.weight("neutral"), Some(0.0));
        for c in ["surprise", "curiosity", "realization", "confusion", "nervousness"] {
            assert_eq!(w.weight(c), Some(0.0));
        }
        assert_eq!(EMOTION_CATEGORIES[NEUTRAL_INDEX], "neutral");
    }

    #[test]
    fn shipped_table_matches_default() {
        let shipped = ValenceWeights::from_json(include_str!("../../assets/valence_weights.json")).unwrap();
        assert_eq!(shipped, ValenceWeights::default());
    }

    #[test]
    fn json_validation() {
        let mut map: std::collections::BTreeMap<String, f64> = ValenceWeights::default().into();
        map.remove("fear");
        let err = ValenceWeights::try_from(map.clone()).unwrap_err();
        assert!(err.contains("fear"));
        map.insert("fear".into(), -2.0);
        assert!(ValenceWeights::try_from(map.clone()).is_err());
        map.insert("fear".into(), -0.5);
        map.insert("neutral".into(), 0.1);
        assert!(ValenceWeights::try_from(map).is_err());
    }
}

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Binary peace label. `High` is encoded as 1, `Low` as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeaceLabel {
    Low,
    High,
}

/// Probabilities at or above this value are classified as high-peace.
pub const DECISION_THRESHOLD: f64 = 0.5;

impl PeaceLabel {
    pub fn from_probability(p: f64) -> Self {
        if p >= DECISION_THRESHOLD {
            PeaceLabel::High
        } else {
            PeaceLabel::Low
        }
    }

    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(PeaceLabel::Low),
            1 => Some(PeaceLabel::High),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            PeaceLabel::Low => 0,
            PeaceLabel::High => 1,
        }
    }

    pub fn target(self) -> f64 {
        self.bit() as f64
    }
}

impl fmt::Display for PeaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PeaceLabel::Low => "low",
            PeaceLabel::High => "high",
        })
    }
}

impl FromStr for PeaceLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" | "1" => Ok(PeaceLabel::High),
            "low" | "0" => Ok(PeaceLabel::Low),
            other => Err(format!("unknown peace label {other:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_goes_to_high() {
        assert_eq!(PeaceLabel::from_probability(0.5), PeaceLabel::High);
        assert_eq!(PeaceLabel::from_probability(0.4999999), PeaceLabel::Low);
    }

    #[test]
    fn bits_round_trip() {
        for l in [PeaceLabel::Low, PeaceLabel::High] {
            assert_eq!(PeaceLabel::from_bit(l.bit()), Some(l));
        }
        assert_eq!(PeaceLabel::from_bit(2), None);
    }
}

use super::EvalError;
use crate::label::PeaceLabel;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Fraction of positions where `predictions` and `truths` agree.
pub fn accuracy<T: PartialEq>(predictions: &[T], truths: &[T]) -> Result<f64, EvalError> {
    if predictions.len() != truths.len() {
        return Err(EvalError::LengthMismatch(predictions.len(), truths.len()));
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let correct = predictions.iter().zip(truths).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / predictions.len() as f64)
}

/// Pearson coefficient, or `Undefined` when either side has zero variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "r", rename_all = "snake_case")]
pub enum Correlation {
    Defined(f64),
    Undefined,
}

impl Correlation {
    pub fn value(self) -> Option<f64> {
        match self {
            Correlation::Defined(r) => Some(r),
            Correlation::Undefined => None,
        }
    }
}

fn constant(xs: &[f64]) -> bool {
    xs.iter().all(|x| *x == xs[0])
}

/// Sample Pearson correlation (two-pass, clamped to [-1, 1]).
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<Correlation, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(EvalError::TooFew { need: 2, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    if constant(x) || constant(y) {
        return Ok(Correlation::Undefined);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(Correlation::Undefined);
    }
    Ok(Correlation::Defined((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountryPrediction {
    pub articles: usize,
    pub mean_probability: f64,
    pub label: PeaceLabel,
}

/// Mean high-peace probability per country, thresholded like single
/// predictions. Probabilities are summed in sorted order so the result does
/// not depend on article order.
pub fn country_level_classify(
    groups: &BTreeMap<String, Vec<f64>>,
) -> Result<BTreeMap<String, CountryPrediction>, EvalError> {
    groups
        .iter()
        .map(|(country, probs)| {
            if probs.is_empty() {
                return Err(EvalError::EmptyGroup(country.clone()));
            }
            let mut sorted = probs.clone();
            sorted.sort_by(f64::total_cmp);
            let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
            Ok((
                country.clone(),
                CountryPrediction {
                    articles: probs.len(),
                    mean_probability: mean,
                    label: PeaceLabel::from_probability(mean),
                },
            ))
        })
        .collect()
}

/// Collect `(country, probability)` pairs into per-country groups.
pub fn group_by_country<'a>(items: impl IntoIterator<Item = (&'a str, f64)>) -> BTreeMap<String, Vec<f64>> {
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (c, p) in items {
        groups.entry(c.to_string()).or_default().push(p);
    }
    groups
}

/// Degenerate-classifier alarm bounds on the high-peace share.
pub const DEGENERATE_HIGH: f64 = 0.95;
pub const DEGENERATE_LOW: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferDiagnostic {
    pub total: usize,
    pub high: usize,
    pub high_fraction: f64,
    pub alarm: bool,
}

/// Share of out-of-domain items labelled high-peace; alarms when nearly all
/// or nearly none are.
pub fn transfer_diagnostic(predictions: &[PeaceLabel]) -> Result<TransferDiagnostic, EvalError> {
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let high = predictions.iter().filter(|l| **l == PeaceLabel::High).count();
    let high_fraction = high as f64 / predictions.len() as f64;
    Ok(TransferDiagnostic {
        total: predictions.len(),
        high,
        high_fraction,
        alarm: high_fraction >= DEGENERATE_HIGH || high_fraction <= DEGENERATE_LOW,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub true_high: usize,
    pub true_low: usize,
    pub false_high: usize,
    pub false_low: usize,
}

impl Confusion {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a PeaceLabel, &'a PeaceLabel)>) -> Self {
        let mut c = Confusion::default();
        for (pred, truth) in pairs {
            match (pred, truth) {
                (PeaceLabel::High, PeaceLabel::High) => c.true_high += 1,
                (PeaceLabel::Low, PeaceLabel::Low) => c.true_low += 1,
                (PeaceLabel::High, PeaceLabel::Low) => c.false_high += 1,
                (PeaceLabel::Low, PeaceLabel::High) => c.false_low += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.true_high + self.true_low + self.false_high + self.false_low
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use PeaceLabel::{High, Low};

    #[test]
    fn accuracy_examples() {
        let t = [High, Low, High, Low, High, Low, High, Low, High, Low];
        let mut p = t;
        p[0] = Low;
        p[1] = High;
        assert_eq!(accuracy(&p, &t).unwrap(), 0.8);
        assert_eq!(accuracy(&t, &t).unwrap(), 1.0);
        let flipped: Vec<_> = t.iter().map(|l| if *l == High { Low } else { High }).collect();
        assert_eq!(accuracy(&flipped, &t).unwrap(), 0.0);
        assert!(accuracy::<PeaceLabel>(&[], &[]).is_err());
        assert!(accuracy(&[High], &[High, Low]).is_err());
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(pearson_r(&x, &x).unwrap(), Correlation::Defined(1.0));
        assert_eq!(pearson_r(&x, &[3.0, 2.0, 1.0]).unwrap(), Correlation::Defined(-1.0));
        // 3 / sqrt(2 * (14/3))
        let r = pearson_r(&x, &[1.0, 2.0, 4.0]).unwrap().value().unwrap();
        assert!((r - 0.981981).abs() < 1e-6);
        assert_eq!(pearson_r(&x, &[2.0; 3]).unwrap(), Correlation::Undefined);
        assert_eq!(pearson_r(&[0.1; 3], &x).unwrap(), Correlation::Undefined);
        assert!(pearson_r(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn country_examples() {
        let mut g = BTreeMap::new();
        g.insert("A".to_string(), vec![0.9, 0.8, 0.4]);
        g.insert("B".to_string(), vec![0.4, 0.4]);
        let out = country_level_classify(&g).unwrap();
        assert!((out["A"].mean_probability - 0.7).abs() < 1e-15);
        assert_eq!(out["A"].label, High);
        assert_eq!(out["B"].label, Low);
        g.insert("C".to_string(), vec![]);
        assert!(country_level_classify(&g).is_err());
        g.clear();
        g.insert("T".to_string(), vec![0.5]);
        assert_eq!(country_level_classify(&g).unwrap()["T"].label, High);
    }

    #[test]
    fn transfer_examples() {
        let mk = |h: usize| (0..22).map(|i| if i < h { High } else { Low }).collect::<Vec<_>>();
        let d = transfer_diagnostic(&mk(21)).unwrap();
        assert!(d.alarm && (d.high_fraction - 21.0 / 22.0).abs() < 1e-15);
        assert!(!transfer_diagnostic(&mk(11)).unwrap().alarm);
        assert!(transfer_diagnostic(&mk(0)).unwrap().alarm);
        assert!(transfer_diagnostic(&[]).is_err());
    }

    fn vecs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..30).prop_flat_map(|n| {
            (
                proptest::collection::vec(-100.0f64..100.0, n),
                proptest::collection::vec(-100.0f64..100.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn pearson_symmetry_and_affine((x, y) in vecs(), a in 0.1f64..10.0, b in -50.0f64..50.0) {
            let r = pearson_r(&x, &y).unwrap().value().unwrap();
            prop_assert!((-1.0..=1.0).contains(&r));
            prop_assert_eq!(pearson_r(&y, &x).unwrap().value().unwrap(), r);
            let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            prop_assert!((pearson_r(&ax, &y).unwrap().value().unwrap() - r).abs() < 1e-9);
            let neg: Vec<f64> = x.iter().map(|v| -a * v + b).collect();
            prop_assert!((pearson_r(&neg, &y).unwrap().value().unwrap() + r).abs() < 1e-9);
        }

        #[test]
        fn accuracy_permutation(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..50), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let lab = |b: bool| if b { High } else { Low };
            let mut pairs: Vec<_> = pairs.into_iter().map(|(a, b)| (lab(a), lab(b))).collect();
            let (p, t): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
            let acc = accuracy(&p, &t).unwrap();
            prop_assert!((0.0..=1.0).contains(&acc));
            pairs.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (p2, t2): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            prop_assert_eq!(accuracy(&p2, &t2).unwrap(), acc);
        }

        #[test]
        fn country_order_and_duplication(probs in proptest::collection::vec(0.0f64..=1.0, 1..40), k in 1usize..5, seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let base = country_level_classify(&BTreeMap::from([("X".to_string(), probs.clone())])).unwrap()["X"];
            let mut shuffled = probs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let s = country_level_classify(&BTreeMap::from([("X".to_string(), shuffled)])).unwrap()["X"];
            prop_assert_eq!(s.mean_probability, base.mean_probability);
            prop_assert_eq!(s.label, base.label);
            let dup: Vec<f64> = probs.iter().flat_map(|p| std::iter::repeat_n(*p, k)).collect();
            let d = country_level_classify(&BTreeMap::from([("X".to_string(), dup)])).unwrap()["X"];
            prop_assert!((d.mean_probability - base.mean_probability).abs() < 1e-12);
            if (base.mean_probability - 0.5).abs() > 1e-12 {
                prop_assert_eq!(d.label, base.label);
            }
        }
    }
}

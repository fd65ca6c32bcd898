//! Brute-force reference implementations of the evaluation math. Each
//! `*_against_oracle` check panics on the first disagreement.

use peacelens::eval::*;
use peacelens::scorer::PeaceDimension;
use peacelens::PeaceLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

pub const TOL: f64 = 1e-12;

/// Pairwise-difference form of r: no means involved.
pub fn oracle_r(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let (dx, dy) = (x[i] - x[j], y[i] - y[j]);
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

pub fn pearson_against_oracle(seed: u64, instances: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let n = rng.random_range(2..40);
        let discrete = rng.random_bool(0.3);
        let draw = |rng: &mut ChaCha8Rng| {
            if discrete {
                rng.random_range(1..=5) as f64
            } else {
                rng.random_range(-10.0..10.0)
            }
        };
        let x: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| v * rng.random_range(-1.0..1.0) + draw(&mut rng)).collect();
        match (pearson_r(&x, &y).unwrap(), oracle_r(&x, &y)) {
            (Correlation::Defined(a), Some(b)) => assert!((a - b).abs() < TOL, "{a} vs {b}"),
            (Correlation::Undefined, None) => {}
            (a, b) => panic!("{a:?} vs {b:?} on {x:?} {y:?}"),
        }
    }
}

pub fn accuracy_and_country_vote_against_oracle(seed: u64, instances: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let n = rng.random_range(1..60);
        let probs: Vec<(String, f64)> = (0..n)
            .map(|_| (format!("C{}", rng.random_range(0..6)), rng.random_range(0.0..1.0)))
            .collect();
        let grouped = group_by_country(probs.iter().map(|(c, p)| (c.as_str(), *p)));
        let got = country_level_classify(&grouped).unwrap();
        for (c, pred) in &got {
            let mine: Vec<f64> = probs.iter().filter(|(k, _)| k == c).map(|(_, p)| *p).collect();
            let mean = mine.iter().sum::<f64>() / mine.len() as f64;
            assert_eq!(pred.articles, mine.len());
            assert!((pred.mean_probability - mean).abs() < TOL);
            if (mean - 0.5).abs() > TOL {
                assert_eq!(pred.label, if mean >= 0.5 { PeaceLabel::High } else { PeaceLabel::Low });
            }
        }
        let truth: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let pred: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let mut hits = 0;
        for i in 0..n {
            if truth[i] == pred[i] {
                hits += 1;
            }
        }
        assert!((accuracy(&pred, &truth).unwrap() - hits as f64 / n as f64).abs() < TOL);
    }
}

pub struct Instance {
    pub gold: GoldStandard,
    /// dense [video][rater] for one dimension
    pub matrix: Vec<Vec<Option<f64>>>,
}

pub fn random_gold(rng: &mut ChaCha8Rng, dim: PeaceDimension) -> Instance {
    let videos = rng.random_range(1..=10);
    let raters = rng.random_range(1..=5);
    let density = rng.random_range(0.2..1.0);
    let mut gold = GoldStandard::new();
    let mut matrix = vec![vec![None; raters]; videos];
    for (v, row) in matrix.iter_mut().enumerate() {
        for (r, cell) in row.iter_mut().enumerate() {
            if rng.random_bool(density) {
                let s = if rng.random_bool(0.5) {
                    rng.random_range(1..=5) as f64
                } else {
                    (rng.random_range(10..=50) as f64) / 10.0
                };
                gold.insert(&format!("v{v:02}"), &format!("r{r}"), dim, s).unwrap();
                *cell = Some(s);
            }
        }
    }
    Instance { gold, matrix }
}

pub fn aggregate_against_oracle(seed: u64, instances: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = PeaceDimension::PreventionPromotion;
    for _ in 0..instances {
        let inst = random_gold(&mut rng, dim);
        let mut means: Vec<f64> = inst
            .matrix
            .iter()
            .filter_map(|row| {
                let s: Vec<f64> = row.iter().flatten().copied().collect();
                (!s.is_empty()).then(|| s.iter().sum::<f64>() / s.len() as f64)
            })
            .collect();
        let stats = &aggregate_gold(&inst.gold)[dim.index()];
        assert_eq!(stats.n, means.len());
        if means.is_empty() {
            assert_eq!(stats.mean, None);
            continue;
        }
        let n = means.len() as f64;
        let mean = means.iter().sum::<f64>() / n;
        assert!((stats.mean.unwrap() - mean).abs() < TOL);
        match stats.sd {
            None => assert_eq!(means.len(), 1),
            Some(sd) => {
                let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (n - 1.0);
                assert!((sd - var.sqrt()).abs() < TOL);
            }
        }
        // median by counting: the value(s) with half the sample on each side
        means.sort_by(f64::total_cmp);
        let k = means.len();
        let lo = means[(k - 1) / 2];
        let hi = means[k / 2];
        assert!((stats.median.unwrap() - (lo + hi) / 2.0).abs() < TOL);
        assert_eq!(stats.min, Some(means[0]));
        assert_eq!(stats.max, Some(means[k - 1]));
    }
}

pub fn reliability_against_oracle(seed: u64, instances: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = PeaceDimension::OrderCreativity;
    for _ in 0..instances {
        let inst = random_gold(&mut rng, dim);
        let report = inter_rater_reliability(&inst.gold, dim);
        let raters: Vec<usize> = (0..inst.matrix[0].len())
            .filter(|r| inst.matrix.iter().any(|row| row[*r].is_some()))
            .collect();
        assert_eq!(report.pairs.len(), raters.len() * raters.len().saturating_sub(1) / 2);
        let (mut agree, mut total) = (0, 0);
        let mut pairs = report.pairs.iter();
        for (i, a) in raters.iter().enumerate() {
            for b in &raters[i + 1..] {
                let p = pairs.next().unwrap();
                assert_eq!((p.rater_a.clone(), p.rater_b.clone()), (format!("r{a}"), format!("r{b}")));
                let shared: Vec<(f64, f64)> = inst
                    .matrix
                    .iter()
                    .filter_map(|row| Some((row[*a]?, row[*b]?)))
                    .collect();
                assert_eq!(p.shared_videos, shared.len());
                // scores are multiples of 0.1; compare in tenths to stay exact
                let ok = shared
                    .iter()
                    .filter(|(x, y)| ((x * 10.0).round() - (y * 10.0).round()).abs() <= 10.0)
                    .count();
                agree += ok;
                total += shared.len();
                if shared.is_empty() {
                    assert_eq!(p.within_one, None);
                } else {
                    assert!((p.within_one.unwrap() - ok as f64 / shared.len() as f64).abs() < TOL);
                }
                if shared.len() < 2 {
                    assert!(p.insufficient_overlap());
                } else {
                    let (x, y): (Vec<f64>, Vec<f64>) = shared.into_iter().unzip();
                    match (p.r.unwrap(), oracle_r(&x, &y)) {
                        (Correlation::Defined(g), Some(w)) => assert!((g - w).abs() < TOL),
                        (Correlation::Undefined, None) => {}
                        (g, w) => panic!("{g:?} vs {w:?}"),
                    }
                }
            }
        }
        assert_eq!(report.pooled_observations, total);
        if total > 0 {
            assert!((report.pooled_within_one.unwrap() - agree as f64 / total as f64).abs() < TOL);
        }
    }
}

pub fn model_vs_human_against_oracle(seed: u64, instances: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = PeaceDimension::NuanceSimplistic;
    for _ in 0..instances {
        let inst = random_gold(&mut rng, dim);
        let mut model = BTreeMap::new();
        for v in 0..inst.matrix.len() + 2 {
            if rng.random_bool(0.8) {
                model.insert(format!("v{v:02}"), rng.random_range(1..=5) as f64);
            }
        }
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (v, row) in inst.matrix.iter().enumerate() {
            let s: Vec<f64> = row.iter().flatten().copied().collect();
            if let (Some(m), false) = (model.get(&format!("v{v:02}")), s.is_empty()) {
                x.push(*m);
                y.push(s.iter().sum::<f64>() / s.len() as f64);
            }
        }
        match model_vs_human(&model, &inst.gold, dim, "m", "text_only") {
            Err(_) => assert!(x.len() < 2),
            Ok(e) => {
                assert_eq!(e.n, x.len());
                match (e.r, oracle_r(&x, &y)) {
                    (Correlation::Defined(g), Some(w)) => assert!((g - w).abs() < TOL),
                    (Correlation::Undefined, None) => {}
                    (g, w) => panic!("{g:?} vs {w:?}"),
                }
            }
        }
    }
}

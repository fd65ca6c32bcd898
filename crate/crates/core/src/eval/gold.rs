use super::stats::{pearson_r, Correlation};
use super::EvalError;
use crate::scorer::PeaceDimension;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

/// Human ratings keyed by (video, rater, dimension); any entry may be absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldStandard {
    ratings: BTreeMap<(String, String, PeaceDimension), f64>,
    /// Pole orientation per dimension, e.g. "5 = compassion, 1 = contempt".
    pub codebook: BTreeMap<PeaceDimension, String>,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    video_id: String,
    rater_id: String,
    dimension: String,
    score: f64,
}

fn default_codebook() -> BTreeMap<PeaceDimension, String> {
    PeaceDimension::ALL
        .iter()
        .map(|d| {
            let (hi, lo) = d.poles();
            (*d, format!("5 = {hi}, 1 = {lo}"))
        })
        .collect()
}

impl GoldStandard {
    pub fn new() -> Self {
        GoldStandard {
            ratings: BTreeMap::new(),
            codebook: default_codebook(),
        }
    }

    pub fn insert(&mut self, video: &str, rater: &str, dim: PeaceDimension, score: f64) -> Result<(), EvalError> {
        if !(1.0..=5.0).contains(&score) {
            return Err(EvalError::Gold(format!("{video}/{rater}/{dim}: score {score} outside [1, 5]")));
        }
        let key = (video.to_string(), rater.to_string(), dim);
        if self.ratings.insert(key, score).is_some() {
            return Err(EvalError::Gold(format!("{video}/{rater}/{dim}: duplicate rating")));
        }
        Ok(())
    }

    /// CSV with header `video_id,rater_id,dimension,score`.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self, EvalError> {
        let mut gold = GoldStandard::new();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
            let row = row.map_err(|e| EvalError::Gold(format!("row {}: {e}", i + 1)))?;
            let dim = row
                .dimension
                .parse::<PeaceDimension>()
                .map_err(|e| EvalError::Gold(format!("row {}: {e}", i + 1)))?;
            gold.insert(&row.video_id, &row.rater_id, dim, row.score)?;
        }
        Ok(gold)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let f = std::fs::File::open(path.as_ref())
            .map_err(|e| EvalError::Gold(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_reader(f)
    }

    pub fn get(&self, video: &str, rater: &str, dim: PeaceDimension) -> Option<f64> {
        self.ratings.get(&(video.to_string(), rater.to_string(), dim)).copied()
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn raters(&self) -> BTreeSet<&str> {
        self.ratings.keys().map(|(_, r, _)| r.as_str()).collect()
    }

    /// rater -> video -> score for one dimension.
    fn by_rater(&self, dim: PeaceDimension) -> BTreeMap<&str, BTreeMap<&str, f64>> {
        let mut out: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
        for ((v, r, d), s) in &self.ratings {
            if *d == dim {
                out.entry(r.as_str()).or_default().insert(v.as_str(), *s);
            }
        }
        out
    }

    /// Mean over available raters for every video rated on `dim`.
    pub fn video_means(&self, dim: PeaceDimension) -> BTreeMap<String, f64> {
        let mut acc: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for ((v, _, d), s) in &self.ratings {
            if *d == dim {
                acc.entry(v.as_str()).or_default().push(*s);
            }
        }
        acc.into_iter()
            .map(|(v, s)| (v.to_string(), s.iter().sum::<f64>() / s.len() as f64))
            .collect()
    }
}

/// Descriptive statistics for one dimension. Statistics are `None` when
/// undefined: everything for N = 0, the standard deviation for N = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionStats {
    pub dimension: PeaceDimension,
    pub n: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation (N - 1).
    pub sd: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// Mean of the two central values when N is even.
    pub median: Option<f64>,
}

pub fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0),
    }
}

pub fn describe(dimension: PeaceDimension, values: &[f64]) -> DimensionStats {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let mean = (n > 0).then(|| v.iter().sum::<f64>() / n as f64);
    let sd = mean.filter(|_| n > 1).map(|m| {
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    });
    DimensionStats {
        dimension,
        n,
        mean,
        sd,
        min: v.first().copied(),
        max: v.last().copied(),
        median: median(&v),
    }
}

/// Per-dimension statistics over per-video rater means, in canonical order.
pub fn aggregate_gold(gold: &GoldStandard) -> Vec<DimensionStats> {
    PeaceDimension::ALL
        .iter()
        .map(|d| {
            let means: Vec<f64> = gold.video_means(*d).into_values().collect();
            describe(*d, &means)
        })
        .collect()
}

/// Two ratings agree when they differ by at most one point. The slack absorbs
/// decimal representation error (4.6 - 3.6 is not exactly 1).
pub const AGREEMENT_MARGIN: f64 = 1.0 + 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReliability {
    pub rater_a: String,
    pub rater_b: String,
    pub shared_videos: usize,
    /// `None` when fewer than two shared videos: flagged, not estimated.
    pub r: Option<Correlation>,
    pub within_one: Option<f64>,
}

impl PairReliability {
    pub fn insufficient_overlap(&self) -> bool {
        self.r.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub dimension: PeaceDimension,
    pub pairs: Vec<PairReliability>,
    /// Agreement over every co-rated (video, rater pair) observation.
    pub pooled_within_one: Option<f64>,
    pub pooled_observations: usize,
}

/// Pairwise Pearson r and within-one-point agreement for every rater pair.
pub fn inter_rater_reliability(gold: &GoldStandard, dim: PeaceDimension) -> ReliabilityReport {
    let by = gold.by_rater(dim);
    let raters: Vec<&str> = by.keys().copied().collect();
    let mut pairs = Vec::new();
    let (mut agree, mut total) = (0usize, 0usize);
    for (i, a) in raters.iter().enumerate() {
        for b in &raters[i + 1..] {
            let (sa, sb) = (&by[a], &by[b]);
            let shared: Vec<(f64, f64)> = sa
                .iter()
                .filter_map(|(v, x)| sb.get(v).map(|y| (*x, *y)))
                .collect();
            let ok = shared.iter().filter(|(x, y)| (x - y).abs() <= AGREEMENT_MARGIN).count();
            agree += ok;
            total += shared.len();
            let r = (shared.len() >= 2).then(|| {
                let (x, y): (Vec<f64>, Vec<f64>) = shared.iter().copied().unzip();
                pearson_r(&x, &y).expect("lengths checked")
            });
            pairs.push(PairReliability {
                rater_a: a.to_string(),
                rater_b: b.to_string(),
                shared_videos: shared.len(),
                r,
                within_one: (!shared.is_empty()).then(|| ok as f64 / shared.len() as f64),
            });
        }
    }
    ReliabilityReport {
        dimension: dim,
        pairs,
        pooled_within_one: (total > 0).then(|| agree as f64 / total as f64),
        pooled_observations: total,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub model_id: String,
    /// e.g. "text_only" or "dual_input".
    pub mode: String,
    pub dimension: PeaceDimension,
    pub n: usize,
    pub r: Correlation,
}

/// Correlate model scores with per-video human means on shared videos.
pub fn model_vs_human(
    model_scores: &BTreeMap<String, f64>,
    gold: &GoldStandard,
    dim: PeaceDimension,
    model_id: &str,
    mode: &str,
) -> Result<CorrelationEntry, EvalError> {
    let human = gold.video_means(dim);
    let (x, y): (Vec<f64>, Vec<f64>) = model_scores
        .iter()
        .filter_map(|(v, m)| human.get(v).map(|h| (*m, *h)))
        .unzip();
    if x.len() < 2 {
        return Err(EvalError::TooFew { need: 2, got: x.len() });
    }
    Ok(CorrelationEntry {
        model_id: model_id.to_string(),
        mode: mode.to_string(),
        dimension: dim,
        n: x.len(),
        r: pearson_r(&x, &y)?,
    })
}

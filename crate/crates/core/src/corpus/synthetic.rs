use super::{CorpusError, LabeledExample};
use crate::label::PeaceLabel;
use crate::nn::EMBEDDING_DIM;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Two-class Gaussian cluster corpus standing in for real news embeddings.
///
/// Every country gets a centre on the unit sphere, orthogonal to a fixed
/// class direction `d`. High-peace articles sit at `centre + (s/2) d`,
/// low-peace ones at `centre - (s/2) d`, plus isotropic noise with standard
/// deviation `noise_sigma` per coordinate. Vectors are not normalised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    /// Even; the first half are high-peace.
    pub countries: usize,
    pub articles_per_country: usize,
    pub separation: f64,
    pub noise_sigma: f64,
    pub dim: usize,
    pub seed: u64,
    /// Seeds the class direction. Shared by default so that corpora generated
    /// with different `seed`s agree on which way is high-peace.
    pub direction_seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            countries: 16,
            articles_per_country: 100,
            separation: 2.0,
            noise_sigma: 1.0,
            dim: EMBEDDING_DIM,
            seed: 0,
            direction_seed: 0x5eed_d1ec,
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit class direction for a given direction seed and dimension.
pub fn class_direction(direction_seed: u64, dim: usize) -> Vec<f64> {
    let mut d = gaussian(&mut ChaCha8Rng::seed_from_u64(direction_seed), dim);
    normalize(&mut d);
    d
}

/// Country codes `C00`, `C01`, ... in generation order.
fn country_code(i: usize) -> String {
    format!("C{i:02}")
}

pub fn generate_synthetic_corpus(config: &SyntheticConfig) -> Result<Vec<LabeledExample>, CorpusError> {
    let SyntheticConfig {
        countries,
        articles_per_country,
        separation,
        noise_sigma,
        dim,
        seed,
        direction_seed,
    } = *config;
    if countries == 0 || countries % 2 != 0 {
        return Err(CorpusError::InvalidConfig(format!(
            "countries must be even and positive, got {countries}"
        )));
    }
    if articles_per_country == 0 || dim < 2 {
        return Err(CorpusError::InvalidConfig(
            "articles_per_country and dim must be positive (dim >= 2)".into(),
        ));
    }
    if !(separation >= 0.0 && separation.is_finite()) || !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(CorpusError::InvalidConfig(
            "separation and noise_sigma must be finite and non-negative".into(),
        ));
    }

    let d = class_direction(direction_seed, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(countries * articles_per_country);
    for c in 0..countries {
        let label = if c < countries / 2 {
            PeaceLabel::High
        } else {
            PeaceLabel::Low
        };
        let mut centre = gaussian(&mut rng, dim);
        let along = dot(&centre, &d);
        centre.iter_mut().zip(&d).for_each(|(x, di)| *x -= along * di);
        normalize(&mut centre);
        let shift = if label == PeaceLabel::High { 0.5 } else { -0.5 } * separation;
        for a in 0..articles_per_country {
            let embedding = centre
                .iter()
                .zip(&d)
                .map(|(ci, di)| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    ci + shift * di + noise_sigma * z
                })
                .collect();
            out.push(LabeledExample {
                id: format!("{}-{a:04}", country_code(c)),
                country: country_code(c),
                label,
                embedding,
            });
        }
    }
    Ok(out)
}

use super::CorpusError;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl SplitConfig {
    /// Training-set size for `n` examples. The small epsilon keeps products
    /// such as `100 * 0.8 = 79.99999...` on the intended side of the floor.
    pub fn train_size(&self, n: usize) -> usize {
        ((n as f64 * self.train_fraction + 1e-9).floor() as usize).min(n)
    }
}

/// Seeded shuffle, then the first `floor(N * train_fraction)` go to training.
pub fn train_test_split<T>(mut examples: Vec<T>, config: &SplitConfig) -> Result<(Vec<T>, Vec<T>), CorpusError> {
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(CorpusError::InvalidConfig(format!(
            "train_fraction must be in (0, 1), got {}",
            config.train_fraction
        )));
    }
    if examples.len() < 2 {
        return Err(CorpusError::TooFewExamples(examples.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    examples.shuffle(&mut rng);
    let test = examples.split_off(config.train_size(examples.len()));
    Ok((examples, test))
}

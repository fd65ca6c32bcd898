//! Minibatch training with Adam.

use super::adam::{adam_step, AdamState};
use super::loss::bce_loss;
use super::network::{backward_accumulate, forward, predict};
use super::spec::NetworkSpec;
use super::weights::{ModelWeights, Precision, Scalar};
use super::NnError;
use crate::label::PeaceLabel;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const SHUFFLE_STREAM: u64 = 1;
const DROPOUT_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    /// Single-threaded execution with a fixed reduction order. When false,
    /// per-example gradients of a batch may be computed on several threads
    /// and the result can vary with the machine's core count.
    pub deterministic: bool,
    pub precision: Precision,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 10,
            batch_size: 32,
            learning_rate: 0.001,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            deterministic: true,
            precision: Precision::F32,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0) {
            return bad("adam_beta1 must be in (0, 1)");
        }
        if !(self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0) {
            return bad("adam_beta2 must be in (0, 1)");
        }
        if !(self.adam_epsilon > 0.0) {
            return bad("adam_epsilon must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainExample {
    pub features: Vec<f64>,
    pub label: PeaceLabel,
}

impl TrainExample {
    pub fn new(features: Vec<f64>, label: PeaceLabel) -> Self {
        TrainExample { features, label }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training-mode loss over the epoch's forward passes, each taken
    /// before its batch's update (dropout active).
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingHistory {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

/// Mean loss and accuracy in inference mode.
pub fn evaluate<T: Scalar>(
    spec: &NetworkSpec,
    weights: &ModelWeights<T>,
    data: &[(Vec<T>, PeaceLabel)],
) -> Result<(f64, f64), NnError> {
    if data.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (x, y) in data {
        let p = predict(spec, weights, x)?;
        loss += bce_loss(p, *y);
        if PeaceLabel::from_probability(p) == *y {
            correct += 1;
        }
    }
    Ok((loss / data.len() as f64, correct as f64 / data.len() as f64))
}

fn convert<T: Scalar>(
    spec: &NetworkSpec,
    data: &[TrainExample],
) -> Result<Vec<(Vec<T>, PeaceLabel)>, NnError> {
    data.iter()
        .enumerate()
        .map(|(i, ex)| {
            if ex.features.len() != spec.input_len() {
                return Err(NnError::ShapeMismatch(format!(
                    "example {i} has {} features, network expects {}",
                    ex.features.len(),
                    spec.input_len()
                )));
            }
            Ok((ex.features.iter().map(|v| T::from_f64(*v)).collect(), ex.label))
        })
        .collect()
}

/// Loss and hit counts accumulated during an epoch.
#[derive(Default)]
struct Running {
    loss: f64,
    correct: usize,
    n: usize,
}

impl Running {
    fn add(&mut self, p: f64, y: PeaceLabel) {
        self.loss += bce_loss(p, y);
        self.correct += (PeaceLabel::from_probability(p) == y) as usize;
        self.n += 1;
    }

    fn merge(&mut self, other: Running) {
        self.loss += other.loss;
        self.correct += other.correct;
        self.n += other.n;
    }

    fn means(&self) -> (f64, f64) {
        let n = self.n.max(1) as f64;
        (self.loss / n, self.correct as f64 / n)
    }
}

fn dropout_rng(seed: u64, example_counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ example_counter.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(DROPOUT_STREAM);
    rng
}

/// Train from a seeded Glorot initialization.
pub fn train<T: Scalar>(
    spec: &NetworkSpec,
    train_set: &[TrainExample],
    test_set: Option<&[TrainExample]>,
    config: &TrainingConfig,
) -> Result<(ModelWeights<T>, TrainingHistory), NnError> {
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let weights = ModelWeights::glorot(spec, &mut init_rng);
    train_from(spec, weights, train_set, test_set, config)
}

/// Continue training from the given weights.
pub fn train_from<T: Scalar>(
    spec: &NetworkSpec,
    mut weights: ModelWeights<T>,
    train_set: &[TrainExample],
    test_set: Option<&[TrainExample]>,
    config: &TrainingConfig,
) -> Result<(ModelWeights<T>, TrainingHistory), NnError> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    weights.check_against(spec)?;
    let train_data = convert::<T>(spec, train_set)?;
    let test_data = match test_set {
        Some(t) if !t.is_empty() => Some(convert::<T>(spec, t)?),
        _ => None,
    };

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(SHUFFLE_STREAM);
    let mut state = AdamState::new(spec);
    let mut grads = ModelWeights::zeros(spec);
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut example_counter = 0u64;
    let mut history = TrainingHistory::default();
    let threads = if config.deterministic {
        1
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    };

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut running = Running::default();
        for batch in order.chunks(config.batch_size) {
            grads.zero_fill();
            if threads <= 1 || batch.len() < 2 {
                for &idx in batch {
                    let (x, y) = &train_data[idx];
                    let mut rng = dropout_rng(config.seed, example_counter);
                    example_counter += 1;
                    let f = forward(spec, &weights, x, true, &mut rng)?;
                    running.add(f.probability, *y);
                    backward_accumulate(spec, &weights, &f.cache, *y, &mut grads)?;
                }
            } else {
                running.merge(accumulate_parallel(
                    spec,
                    &weights,
                    &train_data,
                    batch,
                    config.seed,
                    example_counter,
                    threads,
                    &mut grads,
                )?);
                example_counter += batch.len() as u64;
            }
            grads.scale(T::from_f64(1.0 / batch.len() as f64));
            adam_step(&mut weights, &grads, &mut state, config)?;
        }

        let (train_loss, train_accuracy) = running.means();
        let (test_loss, test_accuracy) = match &test_data {
            Some(t) => {
                let (l, a) = evaluate(spec, &weights, t)?;
                (Some(l), Some(a))
            }
            None => (None, None),
        };
        tracing::debug!(epoch, train_loss, train_accuracy, ?test_accuracy, "epoch done");
        history.epochs.push(EpochRecord {
            epoch: epoch + 1,
            train_loss,
            train_accuracy,
            test_loss,
            test_accuracy,
        });
    }
    Ok((weights, history))
}

#[allow(clippy::too_many_arguments)]
fn accumulate_parallel<T: Scalar>(
    spec: &NetworkSpec,
    weights: &ModelWeights<T>,
    data: &[(Vec<T>, PeaceLabel)],
    batch: &[usize],
    seed: u64,
    counter_base: u64,
    threads: usize,
    grads: &mut ModelWeights<T>,
) -> Result<Running, NnError> {
    let chunk = batch.len().div_ceil(threads);
    let partials: Vec<Result<(ModelWeights<T>, Running), NnError>> = std::thread::scope(|s| {
        let handles: Vec<_> = batch
            .chunks(chunk)
            .enumerate()
            .map(|(ci, part)| {
                s.spawn(move || {
                    let mut g = ModelWeights::zeros(spec);
                    let mut running = Running::default();
                    for (j, &idx) in part.iter().enumerate() {
                        let (x, y) = &data[idx];
                        let counter = counter_base + (ci * chunk + j) as u64;
                        let mut rng = dropout_rng(seed, counter);
                        let f = forward(spec, weights, x, true, &mut rng)?;
                        running.add(f.probability, *y);
                        backward_accumulate(spec, weights, &f.cache, *y, &mut g)?;
                    }
                    Ok((g, running))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("gradient worker panicked"))
            .collect()
    });
    let mut running = Running::default();
    for p in partials {
        let (g, r) = p?;
        grads.add_assign(&g);
        running.merge(r);
    }
    Ok(running)
}

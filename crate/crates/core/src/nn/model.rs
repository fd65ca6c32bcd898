use super::network::predict;
use super::spec::NetworkSpec;
use super::train::{train, TrainExample, TrainingConfig, TrainingHistory};
use super::weights::{ModelWeights, Precision, Scalar};
use super::NnError;
use crate::label::PeaceLabel;

/// Weights at either supported precision.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyWeights {
    F32(ModelWeights<f32>),
    F64(ModelWeights<f64>),
}

impl AnyWeights {
    pub fn precision(&self) -> Precision {
        match self {
            AnyWeights::F32(_) => Precision::F32,
            AnyWeights::F64(_) => Precision::F64,
        }
    }

    pub fn bit_identical(&self, other: &AnyWeights) -> bool {
        match (self, other) {
            (AnyWeights::F32(a), AnyWeights::F32(b)) => a.bit_identical(b),
            (AnyWeights::F64(a), AnyWeights::F64(b)) => a.bit_identical(b),
            _ => false,
        }
    }

    pub fn check_against(&self, spec: &NetworkSpec) -> Result<(), NnError> {
        match self {
            AnyWeights::F32(w) => w.check_against(spec),
            AnyWeights::F64(w) => w.check_against(spec),
        }
    }
}

impl From<ModelWeights<f32>> for AnyWeights {
    fn from(w: ModelWeights<f32>) -> Self {
        AnyWeights::F32(w)
    }
}

impl From<ModelWeights<f64>> for AnyWeights {
    fn from(w: ModelWeights<f64>) -> Self {
        AnyWeights::F64(w)
    }
}

/// A frozen spec and its trained weights. Immutable once built, so it can be
/// shared across threads for concurrent inference.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: NetworkSpec,
    weights: AnyWeights,
    seed: u64,
}

impl Model {
    pub fn new(spec: NetworkSpec, weights: AnyWeights, seed: u64) -> Result<Self, NnError> {
        weights.check_against(&spec)?;
        Ok(Model {
            spec,
            weights,
            seed,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn weights(&self) -> &AnyWeights {
        &self.weights
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn precision(&self) -> Precision {
        self.weights.precision()
    }

    pub fn predict(&self, input: &[f64]) -> Result<f64, NnError> {
        match &self.weights {
            AnyWeights::F32(w) => predict_converted(&self.spec, w, input),
            AnyWeights::F64(w) => predict(&self.spec, w, input),
        }
    }

    pub fn classify(&self, input: &[f64]) -> Result<(f64, PeaceLabel), NnError> {
        let p = self.predict(input)?;
        Ok((p, PeaceLabel::from_probability(p)))
    }
}

fn predict_converted<T: Scalar>(
    spec: &NetworkSpec,
    weights: &ModelWeights<T>,
    input: &[f64],
) -> Result<f64, NnError> {
    let x: Vec<T> = input.iter().map(|v| T::from_f64(*v)).collect();
    predict(spec, weights, &x)
}

/// Train at the precision named in the config.
pub fn train_model(
    spec: &NetworkSpec,
    train_set: &[TrainExample],
    test_set: Option<&[TrainExample]>,
    config: &TrainingConfig,
) -> Result<(Model, TrainingHistory), NnError> {
    let (weights, history): (AnyWeights, _) = match config.precision {
        Precision::F32 => {
            let (w, h) = train::<f32>(spec, train_set, test_set, config)?;
            (w.into(), h)
        }
        Precision::F64 => {
            let (w, h) = train::<f64>(spec, train_set, test_set, config)?;
            (w.into(), h)
        }
    };
    Ok((Model::new(spec.clone(), weights, config.seed)?, history))
}

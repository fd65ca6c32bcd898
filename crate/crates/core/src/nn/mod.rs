//! Differentiable micro-network engine: the three peace classifiers, exact
//! backpropagation, Adam, training and checkpoints.

mod adam;
mod checkpoint;
mod loss;
mod model;
mod network;
mod spec;
mod train;
mod weights;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{
    decode, encode, load_checkpoint, save_checkpoint, CheckpointHeader, FORMAT_VERSION, MAGIC,
};
pub use loss::{bce_loss, BCE_EPSILON};
pub use model::{train_model, AnyWeights, Model};
pub use network::{backward, backward_accumulate, forward, predict, Forward, ForwardCache};
pub use spec::{Activation, Architecture, LayerSpec, NetworkSpec, ParamShape, Shape, EMBEDDING_DIM};
pub use train::{
    evaluate, train, train_from, EpochRecord, TrainExample, TrainingConfig, TrainingHistory,
};
pub use weights::{ModelWeights, ParamTensor, Precision, Scalar};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("unknown architecture {0:?}")]
    UnknownArchitecture(String),
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("stale activation cache: {0}")]
    StaleCache(String),
    #[error("non-finite gradient in tensor {tensor} at index {index}")]
    NonFiniteGradient { tensor: usize, index: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u16),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! Declarative layer topology.
//!
//! A [`NetworkSpec`] is validated at construction: shapes must chain from the
//! input to a single sigmoid probability, so every downstream consumer
//! (initializer, forward pass, checkpoint reader) can rely on the shape plan
//! without re-checking it.

use super::NnError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Dimensionality of a text embedding.
pub const EMBEDDING_DIM: usize = 1536;

const CANONICAL_DROPOUT: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Cnn,
    FeedForward,
    RevisedCnn,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [
        Architecture::Cnn,
        Architecture::FeedForward,
        Architecture::RevisedCnn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Cnn => "cnn",
            Architecture::FeedForward => "feed_forward",
            Architecture::RevisedCnn => "revised_cnn",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "cnn" => Ok(Architecture::Cnn),
            "feedforward" | "ff" | "mlp" => Ok(Architecture::FeedForward),
            "revisedcnn" | "rcnn" => Ok(Architecture::RevisedCnn),
            _ => Err(NnError::UnknownArchitecture(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    /// Identity.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d {
        filters: usize,
        kernel_size: usize,
        activation: Activation,
    },
    MaxPool1d {
        pool_size: usize,
    },
    Flatten,
    Dense {
        units: usize,
        activation: Activation,
    },
    Dropout {
        rate: f64,
    },
    Activation {
        activation: Activation,
    },
}

impl LayerSpec {
    pub fn conv1d(filters: usize, kernel_size: usize, activation: Activation) -> Self {
        LayerSpec::Conv1d {
            filters,
            kernel_size,
            activation,
        }
    }

    pub fn dense(units: usize, activation: Activation) -> Self {
        LayerSpec::Dense { units, activation }
    }

    pub fn dropout(rate: f64) -> Self {
        LayerSpec::Dropout { rate }
    }

    pub fn max_pool(pool_size: usize) -> Self {
        LayerSpec::MaxPool1d { pool_size }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::MaxPool1d { .. } => "max_pool1d",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Activation { .. } => "activation",
        }
    }

    pub fn has_params(&self) -> bool {
        matches!(self, LayerSpec::Conv1d { .. } | LayerSpec::Dense { .. })
    }
}

/// Activation tensor shape. Sequences are stored channel-last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Sequence { length: usize, channels: usize },
    Flat { len: usize },
}

impl Shape {
    pub fn numel(&self) -> usize {
        match *self {
            Shape::Sequence { length, channels } => length * channels,
            Shape::Flat { len } => len,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Sequence { length, channels } => write!(f, "({length}, {channels})"),
            Shape::Flat { len } => write!(f, "({len})"),
        }
    }
}

/// Shape of one trainable parameter tensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamShape {
    pub name: String,
    pub dims: Vec<usize>,
}

impl ParamShape {
    pub fn numel(&self) -> usize {
        self.dims.iter().product()
    }
}

/// Resolved shapes for one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LayerPlan {
    pub input: Shape,
    pub output: Shape,
    /// Index of the kernel tensor; the bias follows it.
    pub param_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    architecture: Option<Architecture>,
    input_shape: Shape,
    layers: Vec<LayerSpec>,
    plan: Vec<LayerPlan>,
    params: Vec<ParamShape>,
}

impl NetworkSpec {
    /// Validate a layer stack against an input shape.
    pub fn new(
        architecture: Option<Architecture>,
        input_shape: Shape,
        layers: Vec<LayerSpec>,
    ) -> Result<Self, NnError> {
        if input_shape.numel() == 0 {
            return Err(NnError::InvalidSpec("input shape is empty".into()));
        }
        match layers.last() {
            Some(LayerSpec::Dense {
                units: 1,
                activation: Activation::Sigmoid,
            }) => {}
            _ => {
                return Err(NnError::InvalidSpec(
                    "final layer must be Dense(1, sigmoid)".into(),
                ))
            }
        }

        let mut plan = Vec::with_capacity(layers.len());
        let mut params = Vec::new();
        let mut shape = input_shape;
        for (i, layer) in layers.iter().enumerate() {
            let bad = |msg: String| NnError::InvalidSpec(format!("layer {i} ({}): {msg}", layer.kind_name()));
            let mut param_index = None;
            let output = match (*layer, shape) {
                (
                    LayerSpec::Conv1d {
                        filters,
                        kernel_size,
                        ..
                    },
                    Shape::Sequence { length, channels },
                ) => {
                    if filters == 0 || kernel_size == 0 {
                        return Err(bad("filters and kernel_size must be positive".into()));
                    }
                    if kernel_size > length {
                        return Err(bad(format!(
                            "kernel_size {kernel_size} exceeds sequence length {length}"
                        )));
                    }
                    param_index = Some(params.len());
                    params.push(ParamShape {
                        name: format!("layer{i}.conv1d.kernel"),
                        dims: vec![kernel_size, channels, filters],
                    });
                    params.push(ParamShape {
                        name: format!("layer{i}.conv1d.bias"),
                        dims: vec![filters],
                    });
                    Shape::Sequence {
                        length: length - kernel_size + 1,
                        channels: filters,
                    }
                }
                (LayerSpec::MaxPool1d { pool_size }, Shape::Sequence { length, channels }) => {
                    if pool_size == 0 {
                        return Err(bad("pool_size must be at least 1".into()));
                    }
                    if length / pool_size == 0 {
                        return Err(bad(format!(
                            "pool_size {pool_size} exceeds sequence length {length}"
                        )));
                    }
                    Shape::Sequence {
                        length: length / pool_size,
                        channels,
                    }
                }
                (LayerSpec::Flatten, s) => Shape::Flat { len: s.numel() },
                (LayerSpec::Dense { units, .. }, Shape::Flat { len }) => {
                    if units == 0 {
                        return Err(bad("units must be positive".into()));
                    }
                    param_index = Some(params.len());
                    params.push(ParamShape {
                        name: format!("layer{i}.dense.kernel"),
                        dims: vec![len, units],
                    });
                    params.push(ParamShape {
                        name: format!("layer{i}.dense.bias"),
                        dims: vec![units],
                    });
                    Shape::Flat { len: units }
                }
                (LayerSpec::Dropout { rate }, s) => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(bad(format!("dropout rate {rate} outside [0, 1)")));
                    }
                    s
                }
                (LayerSpec::Activation { .. }, s) => s,
                (LayerSpec::Conv1d { .. } | LayerSpec::MaxPool1d { .. }, Shape::Flat { .. }) => {
                    return Err(bad("requires a sequence input".into()))
                }
                (LayerSpec::Dense { .. }, Shape::Sequence { .. }) => {
                    return Err(bad("requires a flat input; insert Flatten".into()))
                }
            };
            plan.push(LayerPlan {
                input: shape,
                output,
                param_index,
            });
            shape = output;
        }
        debug_assert_eq!(shape, Shape::Flat { len: 1 });

        Ok(NetworkSpec {
            architecture,
            input_shape,
            layers,
            plan,
            params,
        })
    }

    /// The canonical layer stack over full 1536-dimensional embeddings.
    pub fn canonical(architecture: Architecture) -> Self {
        Self::canonical_with_input(architecture, EMBEDDING_DIM)
            .expect("canonical specs are valid at the embedding dimension")
    }

    /// The canonical layer stack over a reduced input length, used where the
    /// full embedding would be too costly (gradient checks).
    pub fn canonical_with_input(
        architecture: Architecture,
        input_len: usize,
    ) -> Result<Self, NnError> {
        use Activation::{Relu, Sigmoid};
        let dropout = LayerSpec::dropout(CANONICAL_DROPOUT);
        let (input_shape, layers) = match architecture {
            Architecture::Cnn => (
                Shape::Sequence {
                    length: input_len,
                    channels: 1,
                },
                vec![
                    LayerSpec::conv1d(64, 3, Relu),
                    LayerSpec::conv1d(32, 3, Relu),
                    LayerSpec::Flatten,
                    LayerSpec::dense(128, Relu),
                    dropout,
                    LayerSpec::dense(64, Relu),
                    dropout,
                    LayerSpec::dense(1, Sigmoid),
                ],
            ),
            Architecture::RevisedCnn => (
                Shape::Sequence {
                    length: input_len,
                    channels: 1,
                },
                vec![
                    LayerSpec::conv1d(64, 3, Relu),
                    LayerSpec::max_pool(2),
                    LayerSpec::conv1d(32, 3, Relu),
                    LayerSpec::Flatten,
                    LayerSpec::dense(128, Relu),
                    dropout,
                    LayerSpec::dense(64, Relu),
                    dropout,
                    LayerSpec::dense(1, Sigmoid),
                ],
            ),
            Architecture::FeedForward => (
                Shape::Flat { len: input_len },
                vec![
                    LayerSpec::dense(512, Relu),
                    dropout,
                    LayerSpec::dense(256, Relu),
                    dropout,
                    LayerSpec::dense(128, Relu),
                    dropout,
                    LayerSpec::dense(64, Relu),
                    dropout,
                    LayerSpec::dense(1, Sigmoid),
                ],
            ),
        };
        Self::new(Some(architecture), input_shape, layers)
    }

    pub fn architecture(&self) -> Option<Architecture> {
        self.architecture
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.numel()
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    /// Parameter tensor shapes in layer order (kernel then bias per layer).
    pub fn param_shapes(&self) -> &[ParamShape] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(ParamShape::numel).sum()
    }

    /// Output shape of every layer, in order.
    pub fn layer_output_shapes(&self) -> Vec<Shape> {
        self.plan.iter().map(|p| p.output).collect()
    }

    pub(crate) fn plan(&self) -> &[LayerPlan] {
        &self.plan
    }

    /// Cheap structural fingerprint used to bind activation caches to a spec.
    pub(crate) fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.input_shape.hash(&mut h);
        for p in &self.params {
            p.dims.hash(&mut h);
        }
        for l in &self.layers {
            l.kind_name().hash(&mut h);
        }
        h.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_units(spec: &NetworkSpec) -> Vec<usize> {
        spec.layers()
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Dense { units, .. } => Some(*units),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn cnn_first_layer() {
        let spec = NetworkSpec::canonical(Architecture::Cnn);
        assert_eq!(
            spec.layers()[0],
            LayerSpec::conv1d(64, 3, Activation::Relu)
        );
        assert_eq!(
            spec.layers()[1],
            LayerSpec::conv1d(32, 3, Activation::Relu)
        );
        assert_eq!(dense_units(&spec), vec![128, 64, 1]);
    }

    #[test]
    fn feed_forward_units() {
        let spec = NetworkSpec::canonical(Architecture::FeedForward);
        assert_eq!(dense_units(&spec), vec![512, 256, 128, 64, 1]);
        let dropouts = spec
            .layers()
            .iter()
            .filter(|l| matches!(l, LayerSpec::Dropout { rate } if *rate == 0.3))
            .count();
        assert_eq!(dropouts, 4);
        assert_eq!(spec.input_shape(), Shape::Flat { len: 1536 });
    }

    #[test]
    fn revised_cnn_has_one_pool_between_convs() {
        let spec = NetworkSpec::canonical(Architecture::RevisedCnn);
        let pools: Vec<usize> = spec
            .layers()
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, LayerSpec::MaxPool1d { pool_size: 2 }))
            .map(|(i, _)| i)
            .collect();
        assert_eq!(pools, vec![1]);
        assert!(matches!(spec.layers()[0], LayerSpec::Conv1d { .. }));
        assert!(matches!(spec.layers()[2], LayerSpec::Conv1d { .. }));
    }

    #[test]
    fn shape_algebra_over_full_embedding() {
        let cnn = NetworkSpec::canonical(Architecture::Cnn);
        let shapes = cnn.layer_output_shapes();
        assert_eq!(shapes[0], Shape::Sequence { length: 1534, channels: 64 });
        assert_eq!(shapes[1], Shape::Sequence { length: 1532, channels: 32 });
        assert_eq!(shapes[2], Shape::Flat { len: 1532 * 32 });
        assert_eq!(*shapes.last().unwrap(), Shape::Flat { len: 1 });

        let rcnn = NetworkSpec::canonical(Architecture::RevisedCnn);
        let shapes = rcnn.layer_output_shapes();
        assert_eq!(shapes[1], Shape::Sequence { length: 767, channels: 64 });
        assert_eq!(shapes[2], Shape::Sequence { length: 765, channels: 32 });
        assert_eq!(*shapes.last().unwrap(), Shape::Flat { len: 1 });
    }

    #[test]
    fn architecture_parsing() {
        assert_eq!("CNN".parse::<Architecture>().unwrap(), Architecture::Cnn);
        assert_eq!(
            "FeedForward".parse::<Architecture>().unwrap(),
            Architecture::FeedForward
        );
        assert_eq!(
            "revised-cnn".parse::<Architecture>().unwrap(),
            Architecture::RevisedCnn
        );
        assert!(matches!(
            "transformer".parse::<Architecture>(),
            Err(NnError::UnknownArchitecture(_))
        ));
    }

    #[test]
    fn rejects_bad_stacks() {
        let seq = Shape::Sequence { length: 4, channels: 1 };
        let out = LayerSpec::dense(1, Activation::Sigmoid);
        // kernel longer than sequence
        assert!(NetworkSpec::new(
            None,
            seq,
            vec![LayerSpec::conv1d(2, 5, Activation::Relu), LayerSpec::Flatten, out]
        )
        .is_err());
        // dense on a sequence
        assert!(NetworkSpec::new(None, seq, vec![out]).is_err());
        // missing sigmoid head
        assert!(NetworkSpec::new(
            None,
            Shape::Flat { len: 4 },
            vec![LayerSpec::dense(1, Activation::Relu)]
        )
        .is_err());
        // dropout rate 1
        assert!(NetworkSpec::new(
            None,
            Shape::Flat { len: 4 },
            vec![LayerSpec::dropout(1.0), out]
        )
        .is_err());
        // pool of zero
        assert!(NetworkSpec::new(
            None,
            seq,
            vec![LayerSpec::max_pool(0), LayerSpec::Flatten, out]
        )
        .is_err());
    }
}

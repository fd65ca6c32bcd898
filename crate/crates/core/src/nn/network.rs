//! Forward pass with activation caching, and exact reverse-mode gradients.
//!
//! Sequences are laid out channel-last (`[length][channels]`), conv kernels as
//! `[kernel][in_channels][filters]` and dense kernels as `[inputs][units]`, so
//! the innermost loops of every kernel run over contiguous output lanes.

use super::spec::{Activation, LayerPlan, LayerSpec, NetworkSpec, Shape};
use super::weights::{ModelWeights, Scalar};
use super::NnError;
use crate::label::PeaceLabel;
use rand::Rng;

/// Activations recorded by [`forward`] and consumed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    spec_fingerprint: u64,
    generation: u64,
    training: bool,
    /// `activations[i]` is the input of layer `i`; the final entry is the raw
    /// sigmoid output.
    activations: Vec<Vec<T>>,
    dropout_masks: Vec<Option<Vec<T>>>,
    pool_argmax: Vec<Option<Vec<u32>>>,
}

impl<T: Scalar> ForwardCache<T> {
    /// A cache that holds nothing; backward rejects it.
    pub fn empty() -> Self {
        ForwardCache {
            spec_fingerprint: 0,
            generation: 0,
            training: false,
            activations: Vec::new(),
            dropout_masks: Vec::new(),
            pool_argmax: Vec::new(),
        }
    }

    pub fn training(&self) -> bool {
        self.training
    }

    /// Output of layer `i`.
    pub fn layer_output(&self, i: usize) -> Option<&[T]> {
        self.activations.get(i + 1).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone)]
pub struct Forward<T> {
    /// Sigmoid output clamped to `[eps, 1 - eps]` (machine epsilon of `T`), so
    /// it is strictly inside (0, 1).
    pub probability: f64,
    pub cache: ForwardCache<T>,
}

#[inline]
pub(crate) fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::ZERO {
        T::ONE / (T::ONE + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::ONE + e)
    }
}

fn activate<T: Scalar>(values: &mut [T], activation: Activation) {
    match activation {
        Activation::Relu => {
            for v in values {
                if *v < T::ZERO {
                    *v = T::ZERO;
                }
            }
        }
        Activation::Sigmoid => {
            for v in values {
                *v = sigmoid(*v);
            }
        }
        Activation::None => {}
    }
}

/// Multiply an upstream gradient by the activation derivative, expressed in
/// terms of the activation output.
fn activation_backward<T: Scalar>(grad: &mut [T], output: &[T], activation: Activation) {
    match activation {
        Activation::Relu => {
            for (g, y) in grad.iter_mut().zip(output) {
                if *y <= T::ZERO {
                    *g = T::ZERO;
                }
            }
        }
        Activation::Sigmoid => {
            for (g, y) in grad.iter_mut().zip(output) {
                *g *= *y * (T::ONE - *y);
            }
        }
        Activation::None => {}
    }
}

#[inline]
fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (yy, xx) in y.iter_mut().zip(x) {
        *yy += a * *xx;
    }
}

/// Dot product with eight independent accumulators so the reduction
/// vectorizes; the summation order is fixed, so results stay reproducible.
#[inline]
fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    const LANES: usize = 8;
    let n = x.len().min(y.len());
    let (xa, xr) = x[..n].split_at(n - n % LANES);
    let (ya, yr) = y[..n].split_at(n - n % LANES);
    let mut acc = [T::ZERO; LANES];
    for (cx, cy) in xa.chunks_exact(LANES).zip(ya.chunks_exact(LANES)) {
        for l in 0..LANES {
            acc[l] += cx[l] * cy[l];
        }
    }
    let mut total = T::ZERO;
    for a in acc {
        total += a;
    }
    for (a, b) in xr.iter().zip(yr) {
        total += *a * *b;
    }
    total
}

/// Valid (no padding), stride-1 one-dimensional convolution.
pub(crate) fn conv1d_forward<T: Scalar>(
    input: &[T],
    length: usize,
    in_channels: usize,
    kernel: &[T],
    kernel_size: usize,
    bias: &[T],
    out: &mut [T],
) {
    let filters = bias.len();
    let out_len = length - kernel_size + 1;
    let window = kernel_size * in_channels;
    for i in 0..out_len {
        let o = &mut out[i * filters..(i + 1) * filters];
        o.copy_from_slice(bias);
        let xw = &input[i * in_channels..i * in_channels + window];
        for (r, &a) in xw.iter().enumerate() {
            if a == T::ZERO {
                continue;
            }
            axpy(a, &kernel[r * filters..(r + 1) * filters], o);
        }
    }
}

pub(crate) fn max_pool_forward<T: Scalar>(
    input: &[T],
    length: usize,
    channels: usize,
    pool: usize,
    out: &mut [T],
    argmax: &mut [u32],
) {
    let out_len = length / pool;
    for o in 0..out_len {
        for c in 0..channels {
            let mut best_idx = o * pool * channels + c;
            let mut best = input[best_idx];
            for j in 1..pool {
                let idx = (o * pool + j) * channels + c;
                if input[idx] > best {
                    best = input[idx];
                    best_idx = idx;
                }
            }
            out[o * channels + c] = best;
            argmax[o * channels + c] = best_idx as u32;
        }
    }
}

fn dense_forward<T: Scalar>(input: &[T], kernel: &[T], bias: &[T], out: &mut [T]) {
    let units = bias.len();
    out.copy_from_slice(bias);
    for (i, &a) in input.iter().enumerate() {
        if a == T::ZERO {
            continue;
        }
        axpy(a, &kernel[i * units..(i + 1) * units], out);
    }
}

/// Run the network on one input.
///
/// With `training == false` dropout is the identity and the result depends
/// only on `(weights, input)`; `rng` is then never drawn from.
pub fn forward<T: Scalar, R: Rng + ?Sized>(
    spec: &NetworkSpec,
    weights: &ModelWeights<T>,
    input: &[T],
    training: bool,
    rng: &mut R,
) -> Result<Forward<T>, NnError> {
    if input.len() != spec.input_len() {
        return Err(NnError::ShapeMismatch(format!(
            "input has {} values, network expects {}",
            input.len(),
            spec.input_len()
        )));
    }
    if !input.iter().all(|v| v.is_finite()) {
        return Err(NnError::NonFiniteInput);
    }
    weights.check_against(spec)?;

    let n_layers = spec.layers().len();
    let mut activations: Vec<Vec<T>> = Vec::with_capacity(n_layers + 1);
    let mut dropout_masks = vec![None; n_layers];
    let mut pool_argmax = vec![None; n_layers];
    activations.push(input.to_vec());

    let tensors = weights.tensors();
    for (i, (layer, plan)) in spec.layers().iter().zip(spec.plan()).enumerate() {
        let x = activations.last().expect("input pushed");
        let mut out = vec![T::ZERO; plan.output.numel()];
        match *layer {
            LayerSpec::Conv1d {
                kernel_size,
                activation,
                ..
            } => {
                let (length, channels) = seq_dims(plan.input);
                let p = plan.param_index.expect("conv has params");
                conv1d_forward(
                    x,
                    length,
                    channels,
                    &tensors[p].data,
                    kernel_size,
                    &tensors[p + 1].data,
                    &mut out,
                );
                activate(&mut out, activation);
            }
            LayerSpec::MaxPool1d { pool_size } => {
                let (length, channels) = seq_dims(plan.input);
                let mut idx = vec![0u32; out.len()];
                max_pool_forward(x, length, channels, pool_size, &mut out, &mut idx);
                pool_argmax[i] = Some(idx);
            }
            LayerSpec::Flatten => out.copy_from_slice(x),
            LayerSpec::Dense { activation, .. } => {
                let p = plan.param_index.expect("dense has params");
                dense_forward(x, &tensors[p].data, &tensors[p + 1].data, &mut out);
                activate(&mut out, activation);
            }
            LayerSpec::Dropout { rate } => {
                if training && rate > 0.0 {
                    let keep_scale = T::from_f64(1.0 / (1.0 - rate));
                    let mask: Vec<T> = (0..x.len())
                        .map(|_| {
                            if rng.random::<f64>() < rate {
                                T::ZERO
                            } else {
                                keep_scale
                            }
                        })
                        .collect();
                    for ((o, a), m) in out.iter_mut().zip(x).zip(&mask) {
                        *o = *a * *m;
                    }
                    dropout_masks[i] = Some(mask);
                } else {
                    out.copy_from_slice(x);
                }
            }
            LayerSpec::Activation { activation } => {
                out.copy_from_slice(x);
                activate(&mut out, activation);
            }
        }
        activations.push(out);
    }

    let raw = activations.last().expect("output")[0];
    let eps = T::EPSILON;
    let probability = if raw < eps {
        eps
    } else if raw > T::ONE - eps {
        T::ONE - eps
    } else {
        raw
    }
    .to_f64();

    Ok(Forward {
        probability,
        cache: ForwardCache {
            spec_fingerprint: spec.fingerprint(),
            generation: weights.generation(),
            training,
            activations,
            dropout_masks,
            pool_argmax,
        },
    })
}

fn seq_dims(shape: Shape) -> (usize, usize) {
    match shape {
        Shape::Sequence { length, channels } => (length, channels),
        Shape::Flat { .. } => unreachable!("validated at spec construction"),
    }
}

/// Gradients of the binary cross-entropy loss for one example, shaped like
/// the weights.
pub fn backward<T: Scalar>(
    spec: &NetworkSpec,
    weights: &ModelWeights<T>,
    cache: &ForwardCache<T>,
    label: PeaceLabel,
) -> Result<ModelWeights<T>, NnError> {
    let mut grads = ModelWeights::zeros(spec);
    backward_accumulate(spec, weights, cache, label, &mut grads)?;
    Ok(grads)
}

/// Add this example's gradients into `grads`.
pub fn backward_accumulate<T: Scalar>(
    spec: &NetworkSpec,
    weights: &ModelWeights<T>,
    cache: &ForwardCache<T>,
    label: PeaceLabel,
    grads: &mut ModelWeights<T>,
) -> Result<(), NnError> {
    let n_layers = spec.layers().len();
    if cache.activations.len() != n_layers + 1 {
        return Err(NnError::StaleCache(
            "activation cache is missing or from a different network".into(),
        ));
    }
    if cache.spec_fingerprint != spec.fingerprint() {
        return Err(NnError::StaleCache(
            "activation cache was recorded for a different spec".into(),
        ));
    }
    if cache.generation != weights.generation() {
        return Err(NnError::StaleCache(format!(
            "weights changed since the forward pass (generation {} vs {})",
            cache.generation,
            weights.generation()
        )));
    }
    weights.check_against(spec)?;
    grads.check_against(spec)?;

    let tensors = weights.tensors();
    let grad_tensors = grads.tensors_mut();

    // Sigmoid head fused with the loss: dL/dz = p - y.
    let p = cache.activations[n_layers][0];
    let mut grad: Vec<T> = vec![p - T::from_f64(label.target())];
    let mut head = true;

    for i in (0..n_layers).rev() {
        let layer = &spec.layers()[i];
        let plan: &LayerPlan = &spec.plan()[i];
        let x = &cache.activations[i];
        let y = &cache.activations[i + 1];
        let need_input_grad = i > 0;
        grad = match *layer {
            LayerSpec::Dense { activation, .. } => {
                if !head {
                    activation_backward(&mut grad, y, activation);
                }
                let p = plan.param_index.expect("dense has params");
                let units = grad.len();
                let (gk, gb) = split_pair(grad_tensors, p);
                for (b, g) in gb.iter_mut().zip(&grad) {
                    *b += *g;
                }
                for (r, &a) in x.iter().enumerate() {
                    if a != T::ZERO {
                        axpy(a, &grad, &mut gk[r * units..(r + 1) * units]);
                    }
                }
                if need_input_grad {
                    let k = &tensors[p].data;
                    (0..x.len())
                        .map(|r| dot(&k[r * units..(r + 1) * units], &grad))
                        .collect()
                } else {
                    Vec::new()
                }
            }
            LayerSpec::Conv1d {
                kernel_size,
                activation,
                filters,
            } => {
                activation_backward(&mut grad, y, activation);
                let (length, channels) = seq_dims(plan.input);
                let out_len = length - kernel_size + 1;
                let window = kernel_size * channels;
                let p = plan.param_index.expect("conv has params");
                let k = &tensors[p].data;
                let (gk, gb) = split_pair(grad_tensors, p);
                let mut dx = if need_input_grad {
                    vec![T::ZERO; x.len()]
                } else {
                    Vec::new()
                };
                for pos in 0..out_len {
                    let d = &grad[pos * filters..(pos + 1) * filters];
                    for (b, g) in gb.iter_mut().zip(d) {
                        *b += *g;
                    }
                    let start = pos * channels;
                    let xw = &x[start..start + window];
                    for (r, &a) in xw.iter().enumerate() {
                        if a != T::ZERO {
                            axpy(a, d, &mut gk[r * filters..(r + 1) * filters]);
                        }
                    }
                    if need_input_grad {
                        let dxw = &mut dx[start..start + window];
                        for (r, v) in dxw.iter_mut().enumerate() {
                            *v += dot(&k[r * filters..(r + 1) * filters], d);
                        }
                    }
                }
                dx
            }
            LayerSpec::MaxPool1d { .. } => {
                let idx = cache.pool_argmax[i]
                    .as_ref()
                    .ok_or_else(|| NnError::StaleCache("missing pooling indices".into()))?;
                let mut dx = vec![T::ZERO; x.len()];
                for (g, &j) in grad.iter().zip(idx) {
                    dx[j as usize] += *g;
                }
                dx
            }
            LayerSpec::Flatten => grad,
            LayerSpec::Dropout { .. } => {
                if let Some(mask) = &cache.dropout_masks[i] {
                    for (g, m) in grad.iter_mut().zip(mask) {
                        *g *= *m;
                    }
                }
                grad
            }
            LayerSpec::Activation { activation } => {
                activation_backward(&mut grad, y, activation);
                grad
            }
        };
        head = false;
    }
    Ok(())
}

fn split_pair<T>(tensors: &mut [super::weights::ParamTensor<T>], p: usize) -> (&mut [T], &mut [T]) {
    let (a, b) = tensors.split_at_mut(p + 1);
    (&mut a[p].data, &mut b[0].data)
}

/// Inference-mode probability of the high-peace class.
pub fn predict<T: Scalar>(
    spec: &NetworkSpec,
    weights: &ModelWeights<T>,
    input: &[T],
) -> Result<f64, NnError> {
    let mut unused = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    forward(spec, weights, input, false, &mut unused).map(|f| f.probability)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::weights::ParamTensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conv_valid_example() {
        let mut out = [0.0f64; 2];
        conv1d_forward(&[1.0, 2.0, 3.0, 4.0], 4, 1, &[1.0, 0.0, -1.0], 3, &[0.0], &mut out);
        assert_eq!(out, [-2.0, -2.0]);
    }

    #[test]
    fn max_pool_example() {
        let mut out = [0.0f64; 2];
        let mut idx = [0u32; 2];
        max_pool_forward(&[1.0, 3.0, 2.0, 5.0], 4, 1, 2, &mut out, &mut idx);
        assert_eq!(out, [3.0, 5.0]);
        assert_eq!(idx, [1, 3]);
    }

    #[test]
    fn max_pool_floor_drops_tail() {
        let mut out = [0.0f64; 1];
        let mut idx = [0u32; 1];
        max_pool_forward(&[1.0, 3.0, 9.0], 3, 1, 2, &mut out, &mut idx);
        assert_eq!(out, [3.0]);
    }

    fn single_unit(len: usize) -> NetworkSpec {
        NetworkSpec::new(
            None,
            Shape::Flat { len },
            vec![LayerSpec::dense(1, Activation::Sigmoid)],
        )
        .unwrap()
    }

    #[test]
    fn zero_dense_gives_half() {
        let spec = single_unit(5);
        let w: ModelWeights<f64> = ModelWeights::zeros(&spec);
        let p = predict(&spec, &w, &[3.0, -1.0, 2.0, 7.0, 0.5]).unwrap();
        assert_eq!(p, 0.5);
        assert_eq!(PeaceLabel::from_probability(p), PeaceLabel::High);
    }

    #[test]
    fn single_unit_gradient_is_p_minus_y_times_x() {
        let spec = single_unit(1);
        let w = ModelWeights::from_tensors(
            &spec,
            vec![
                ParamTensor { dims: vec![1, 1], data: vec![0.7f64] },
                ParamTensor { dims: vec![1], data: vec![0.0] },
            ],
        )
        .unwrap();
        let x = 1.3;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = forward(&spec, &w, &[x], true, &mut rng).unwrap();
        let p = 1.0 / (1.0 + (-0.7f64 * x).exp());
        for label in [PeaceLabel::Low, PeaceLabel::High] {
            let g = backward(&spec, &w, &f.cache, label).unwrap();
            let expected = (p - label.target()) * x;
            assert!((g.tensors()[0].data[0] - expected).abs() < 1e-15);
            assert!((g.tensors()[1].data[0] - (p - label.target())).abs() < 1e-15);
        }
    }

    #[test]
    fn relu_blocks_gradient_at_negative_preactivation() {
        let spec = NetworkSpec::new(
            None,
            Shape::Flat { len: 1 },
            vec![
                LayerSpec::dense(1, Activation::Relu),
                LayerSpec::dense(1, Activation::Sigmoid),
            ],
        )
        .unwrap();
        let w = ModelWeights::from_tensors(
            &spec,
            vec![
                ParamTensor { dims: vec![1, 1], data: vec![-1.0f64] },
                ParamTensor { dims: vec![1], data: vec![0.0] },
                ParamTensor { dims: vec![1, 1], data: vec![2.0] },
                ParamTensor { dims: vec![1], data: vec![0.0] },
            ],
        )
        .unwrap();
        let f = forward(&spec, &w, &[1.0], false, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let g = backward(&spec, &w, &f.cache, PeaceLabel::High).unwrap();
        assert_eq!(g.tensors()[0].data[0], 0.0);
        assert_eq!(g.tensors()[1].data[0], 0.0);
    }

    #[test]
    fn output_strictly_inside_unit_interval() {
        let spec = single_unit(1);
        for (wv, x) in [(1e6f64, 1.0), (-1e6, 1.0)] {
            let w = ModelWeights::from_tensors(
                &spec,
                vec![
                    ParamTensor { dims: vec![1, 1], data: vec![wv] },
                    ParamTensor { dims: vec![1], data: vec![0.0] },
                ],
            )
            .unwrap();
            let p = predict(&spec, &w, &[x]).unwrap();
            assert!(p > 0.0 && p < 1.0, "{p}");
        }
    }

    #[test]
    fn stale_and_empty_caches_rejected() {
        let spec = NetworkSpec::canonical_with_input(crate::nn::Architecture::FeedForward, 4).unwrap();
        let mut w: ModelWeights<f64> =
            ModelWeights::glorot(&spec, &mut ChaCha8Rng::seed_from_u64(1));
        let f = forward(&spec, &w, &[0.1, 0.2, 0.3, 0.4], true, &mut ChaCha8Rng::seed_from_u64(2))
            .unwrap();
        assert!(matches!(
            backward(&spec, &w, &ForwardCache::empty(), PeaceLabel::High),
            Err(NnError::StaleCache(_))
        ));
        w.tensors_mut()[0].data[0] += 1.0;
        assert!(matches!(
            backward(&spec, &w, &f.cache, PeaceLabel::High),
            Err(NnError::StaleCache(_))
        ));
    }

    #[test]
    fn inference_is_deterministic_and_rejects_bad_input() {
        let spec = NetworkSpec::canonical_with_input(crate::nn::Architecture::Cnn, 12).unwrap();
        let w: ModelWeights<f64> = ModelWeights::glorot(&spec, &mut ChaCha8Rng::seed_from_u64(4));
        let x: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        assert_eq!(predict(&spec, &w, &x).unwrap(), predict(&spec, &w, &x).unwrap());
        assert!(matches!(predict(&spec, &w, &x[..11]), Err(NnError::ShapeMismatch(_))));
        let mut bad = x.clone();
        bad[3] = f64::NAN;
        assert!(matches!(predict(&spec, &w, &bad), Err(NnError::NonFiniteInput)));
    }
}

//! Finite-difference gradient oracle.
//!
//! Independent of the engine: a plain reference forward pass re-evaluates the
//! loss at `theta +/- h` for every parameter. Perturbing one kernel or bias
//! entry changes a single layer's pre-activation linearly, so that layer is
//! updated incrementally and only the downstream layers are recomputed.

use peacelens::nn::{Activation, LayerSpec, ModelWeights, NetworkSpec, Shape};
use peacelens::PeaceLabel;

pub const FD_STEP: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
pub const WORST_TOL: f64 = 1e-2;
/// Below this magnitude both gradients are compared absolutely.
pub const ABS_FLOOR: f64 = 1e-9;

struct RefLayer {
    spec: LayerSpec,
    input: Shape,
    output: Shape,
    kernel: Vec<f64>,
    bias: Vec<f64>,
}

/// Inference-mode reference network; dropout is the identity.
pub struct RefNet {
    layers: Vec<RefLayer>,
}

fn act(v: f64, a: Activation) -> f64 {
    match a {
        Activation::Relu => v.max(0.0),
        Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
        Activation::None => v,
    }
}

fn loss(p: f64, label: PeaceLabel) -> f64 {
    let y = label.target();
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

fn fold(hash: u64, bit: bool) -> u64 {
    (hash ^ bit as u64).wrapping_mul(0x100_0000_01b3).rotate_left(5)
}

impl RefNet {
    pub fn new(spec: &NetworkSpec, weights: &ModelWeights<f64>) -> Self {
        let shapes = spec.layer_output_shapes();
        let mut tensors = weights.tensors().iter();
        let mut input = spec.input_shape();
        let layers = spec
            .layers()
            .iter()
            .zip(shapes)
            .map(|(l, output)| {
                let (kernel, bias) = if l.has_params() {
                    (
                        tensors.next().unwrap().data.clone(),
                        tensors.next().unwrap().data.clone(),
                    )
                } else {
                    (Vec::new(), Vec::new())
                };
                let layer = RefLayer {
                    spec: *l,
                    input,
                    output,
                    kernel,
                    bias,
                };
                input = output;
                layer
            })
            .collect();
        RefNet { layers }
    }

    /// Pre-activation of a parametric layer.
    fn pre_activation(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let l = &self.layers[i];
        match (l.spec, l.input) {
            (
                LayerSpec::Conv1d {
                    filters,
                    kernel_size,
                    ..
                },
                Shape::Sequence { length, channels },
            ) => {
                let out_len = length - kernel_size + 1;
                let mut z = vec![0.0; out_len * filters];
                for t in 0..out_len {
                    for co in 0..filters {
                        let mut s = l.bias[co];
                        for j in 0..kernel_size {
                            for ci in 0..channels {
                                s += x[(t + j) * channels + ci]
                                    * l.kernel[(j * channels + ci) * filters + co];
                            }
                        }
                        z[t * filters + co] = s;
                    }
                }
                z
            }
            (LayerSpec::Dense { units, .. }, Shape::Flat { len }) => {
                let mut z = l.bias.clone();
                for i in 0..len {
                    let row = &l.kernel[i * units..(i + 1) * units];
                    for (zu, k) in z.iter_mut().zip(row) {
                        *zu += x[i] * k;
                    }
                }
                z
            }
            _ => unreachable!("parametric layers only"),
        }
    }

    fn finish(&self, i: usize, z: &[f64]) -> Vec<f64> {
        match self.layers[i].spec {
            LayerSpec::Conv1d { activation, .. } | LayerSpec::Dense { activation, .. } => {
                z.iter().map(|v| act(*v, activation)).collect()
            }
            _ => unreachable!(),
        }
    }

    fn apply(&self, i: usize, x: &[f64], pattern: &mut u64) -> Vec<f64> {
        let l = &self.layers[i];
        let y = match l.spec {
            LayerSpec::Conv1d { .. } | LayerSpec::Dense { .. } => {
                let z = self.pre_activation(i, x);
                self.finish(i, &z)
            }
            LayerSpec::MaxPool1d { pool_size } => {
                let Shape::Sequence { length, channels } = l.input else {
                    unreachable!()
                };
                let mut y = Vec::with_capacity(l.output.numel());
                for o in 0..length / pool_size {
                    for c in 0..channels {
                        let v = (0..pool_size)
                            .map(|j| x[(o * pool_size + j) * channels + c])
                            .fold(f64::NEG_INFINITY, f64::max);
                        y.push(v);
                    }
                }
                y
            }
            LayerSpec::Flatten | LayerSpec::Dropout { .. } => x.to_vec(),
            LayerSpec::Activation { activation } => {
                x.iter().map(|v| act(*v, activation)).collect()
            }
        };
        if let LayerSpec::Conv1d { activation: Activation::Relu, .. }
        | LayerSpec::Dense { activation: Activation::Relu, .. }
        | LayerSpec::Activation { activation: Activation::Relu } = l.spec
        {
            for v in &y {
                *pattern = fold(*pattern, *v > 0.0);
            }
        }
        y
    }

    /// Inputs of every layer plus the final output.
    pub fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let mut pattern = 0;
        for i in 0..self.layers.len() {
            let y = self.apply(i, acts.last().unwrap(), &mut pattern);
            acts.push(y);
        }
        acts
    }

    fn downstream(&self, from: usize, y: Vec<f64>, label: PeaceLabel, mut pattern: u64) -> (f64, u64) {
        let mut cur = y;
        for i in from + 1..self.layers.len() {
            cur = self.apply(i, &cur, &mut pattern);
        }
        (loss(cur[0], label), pattern)
    }

    pub fn loss(&self, x: &[f64], label: PeaceLabel) -> f64 {
        let acts = self.activations(x);
        loss(acts.last().unwrap()[0], label)
    }

    /// Loss with parameter `(layer, is_bias, index)` shifted by `delta`, and a
    /// fingerprint of every downstream ReLU's on/off state.
    fn perturbed(
        &self,
        acts: &[Vec<f64>],
        pre: &[f64],
        layer: usize,
        is_bias: bool,
        index: usize,
        delta: f64,
        label: PeaceLabel,
    ) -> (f64, u64) {
        let l = &self.layers[layer];
        let x = &acts[layer];
        let mut z = pre.to_vec();
        match (l.spec, l.input) {
            (LayerSpec::Dense { units, .. }, _) => {
                if is_bias {
                    z[index] += delta;
                } else {
                    let (i, u) = (index / units, index % units);
                    z[u] += delta * x[i];
                }
            }
            (
                LayerSpec::Conv1d {
                    filters,
                    kernel_size,
                    ..
                },
                Shape::Sequence { length, channels },
            ) => {
                let out_len = length - kernel_size + 1;
                if is_bias {
                    for t in 0..out_len {
                        z[t * filters + index] += delta;
                    }
                } else {
                    let co = index % filters;
                    let r = index / filters; // j * channels + ci
                    for t in 0..out_len {
                        z[t * filters + co] += delta * x[t * channels + r];
                    }
                }
            }
            _ => unreachable!(),
        }
        let y = self.finish(layer, &z);
        let mut pattern = 0u64;
        if let LayerSpec::Conv1d { activation: Activation::Relu, .. }
        | LayerSpec::Dense { activation: Activation::Relu, .. } = l.spec
        {
            for v in &y {
                pattern = fold(pattern, *v > 0.0);
            }
        }
        self.downstream(layer, y, label, pattern)
    }
}

#[derive(Debug, Default)]
pub struct GradCheckReport {
    pub checked: usize,
    pub within_tol: usize,
    pub kinks: usize,
    /// Worst relative error among parameters whose ReLU pattern was stable.
    pub worst_smooth: f64,
    pub worst_any: f64,
}

impl GradCheckReport {
    pub fn fraction_within(&self) -> f64 {
        self.within_tol as f64 / self.checked as f64
    }

    pub fn passes(&self) -> bool {
        self.fraction_within() >= 0.99 && self.worst_smooth < WORST_TOL
    }
}

pub fn relative_error(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    if scale < ABS_FLOOR {
        0.0
    } else {
        (a - n).abs() / scale
    }
}

/// Compare analytic gradients against central differences for every
/// parameter of `net`.
pub fn check_all(net: &RefNet, analytic: &ModelWeights<f64>, x: &[f64], label: PeaceLabel) -> GradCheckReport {
    let acts = net.activations(x);
    let mut report = GradCheckReport::default();
    let mut grads = analytic.tensors().iter();
    for (li, layer) in net.layers.iter().enumerate() {
        if !layer.spec.has_params() {
            continue;
        }
        let pre = net.pre_activation(li, &acts[li]);
        for (is_bias, len) in [(false, layer.kernel.len()), (true, layer.bias.len())] {
            let g = grads.next().unwrap();
            for idx in 0..len {
                let (lp, pp) = net.perturbed(&acts, &pre, li, is_bias, idx, FD_STEP, label);
                let (lm, pm) = net.perturbed(&acts, &pre, li, is_bias, idx, -FD_STEP, label);
                let numeric = (lp - lm) / (2.0 * FD_STEP);
                let rel = relative_error(g.data[idx], numeric);
                report.checked += 1;
                if rel < REL_TOL {
                    report.within_tol += 1;
                }
                report.worst_any = report.worst_any.max(rel);
                if pp != pm {
                    report.kinks += 1;
                } else {
                    report.worst_smooth = report.worst_smooth.max(rel);
                }
            }
        }
    }
    report
}

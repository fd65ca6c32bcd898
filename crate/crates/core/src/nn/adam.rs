use super::spec::NetworkSpec;
use super::train::TrainingConfig;
use super::weights::{ModelWeights, Scalar};
use super::NnError;

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub first_moment: ModelWeights<T>,
    pub second_moment: ModelWeights<T>,
    /// Number of steps applied so far.
    pub step: u64,
}

impl<T: Scalar> PartialEq for AdamState<T> {
    fn eq(&self, other: &Self) -> bool {
        self.step == other.step
            && self.first_moment == other.first_moment
            && self.second_moment == other.second_moment
    }
}

impl<T: Scalar> AdamState<T> {
    pub fn new(spec: &NetworkSpec) -> Self {
        AdamState {
            first_moment: ModelWeights::zeros(spec),
            second_moment: ModelWeights::zeros(spec),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update, in place.
///
/// A gradient containing NaN or infinity is rejected before anything is
/// modified.
pub fn adam_step<T: Scalar>(
    weights: &mut ModelWeights<T>,
    gradients: &ModelWeights<T>,
    state: &mut AdamState<T>,
    config: &TrainingConfig,
) -> Result<(), NnError> {
    config.validate()?;
    let n = weights.tensors().len();
    if gradients.tensors().len() != n
        || state.first_moment.tensors().len() != n
        || state.second_moment.tensors().len() != n
    {
        return Err(NnError::ShapeMismatch(
            "weights, gradients and optimizer state disagree on tensor count".into(),
        ));
    }
    for (ti, (w, g)) in weights.tensors().iter().zip(gradients.tensors()).enumerate() {
        if w.data.len() != g.data.len()
            || state.first_moment.tensors()[ti].data.len() != w.data.len()
            || state.second_moment.tensors()[ti].data.len() != w.data.len()
        {
            return Err(NnError::ShapeMismatch(format!(
                "tensor {ti}: weights {} values, gradients {}",
                w.data.len(),
                g.data.len()
            )));
        }
        if let Some(index) = g.data.iter().position(|v| !v.is_finite()) {
            return Err(NnError::NonFiniteGradient { tensor: ti, index });
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let b1 = config.adam_beta1;
    let b2 = config.adam_beta2;
    let bias1 = T::from_f64(1.0 - b1.powi(t));
    let bias2 = T::from_f64(1.0 - b2.powi(t));
    let lr = T::from_f64(config.learning_rate);
    let eps = T::from_f64(config.adam_epsilon);
    let (b1, b2) = (T::from_f64(b1), T::from_f64(b2));
    let (one_minus_b1, one_minus_b2) = (T::ONE - b1, T::ONE - b2);

    let ms = state.first_moment.tensors_mut();
    let vs = state.second_moment.tensors_mut();
    for (((w, g), m), v) in weights
        .tensors_mut()
        .iter_mut()
        .zip(gradients.tensors())
        .zip(ms.iter_mut())
        .zip(vs.iter_mut())
    {
        for (((theta, &grad), m), v) in w
            .data
            .iter_mut()
            .zip(&g.data)
            .zip(m.data.iter_mut())
            .zip(v.data.iter_mut())
        {
            *m = b1 * *m + one_minus_b1 * grad;
            *v = b2 * *v + one_minus_b2 * grad * grad;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *theta -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

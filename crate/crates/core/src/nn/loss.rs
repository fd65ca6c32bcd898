use crate::label::PeaceLabel;

/// Clamp applied to predictions before taking logarithms.
pub const BCE_EPSILON: f64 = 1e-7;

/// Binary cross-entropy of one prediction.
pub fn bce_loss(prediction: f64, label: PeaceLabel) -> f64 {
    let p = prediction.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
    let y = label.target();
    let loss = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
    loss.max(0.0)
}

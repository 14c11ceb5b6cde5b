/// Huber loss with unit threshold.
pub fn huber(delta: f64) -> f64 {
    if delta.abs() <= 1.0 {
        0.5 * delta * delta
    } else {
        delta.abs() - 0.5
    }
}

/// Derivative of [`huber`] with respect to `delta`.
pub fn huber_grad(delta: f64) -> f64 {
    delta.clamp(-1.0, 1.0)
}

//! Adam optimizer over a flat parameter vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::TrainConfig;

/// First/second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

/// One bias-corrected Adam update, in place:
///
/// ```text
/// m <- b1*m + (1-b1)*g        v <- b2*v + (1-b2)*g^2
/// p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
/// ```
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(Error::ShapeMismatch { expected: params.len(), found: grads.len() });
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    state.t += 1;
    let (b1, b2) = (config.beta1, config.beta2);
    let bc1 = 1.0 - b1.powi(state.t as i32);
    let bc2 = 1.0 - b2.powi(state.t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn config(lr: f64) -> TrainConfig {
        TrainConfig { learning_rate: lr, ..TrainConfig::default() }
    }

    #[test]
    fn two_steps_match_hand_computed_values() {
        // Single parameter p0 = 1, constant gradient 0.5, lr = 0.1,
        // b1 = 0.9, b2 = 0.999, eps = 1e-8; values worked out separately.
        let cfg = config(0.1);
        let mut p = vec![1.0];
        let mut state = AdamState::new(1);

        adam_step(&mut p, &[0.5], &mut state, &cfg).unwrap();
        assert_eq!(state.t, 1);
        assert_abs_diff_eq!(state.m[0], 0.04999999999999999, epsilon = 1e-15);
        assert_abs_diff_eq!(state.v[0], 0.0002500000000000002, epsilon = 1e-15);
        assert_abs_diff_eq!(p[0], 0.900000002, epsilon = 1e-12);

        adam_step(&mut p, &[0.5], &mut state, &cfg).unwrap();
        assert_eq!(state.t, 2);
        assert_abs_diff_eq!(state.m[0], 0.09499999999999997, epsilon = 1e-15);
        assert_abs_diff_eq!(state.v[0], 0.0004997500000000004, epsilon = 1e-15);
        assert_abs_diff_eq!(p[0], 0.8000000040000006, epsilon = 1e-12);
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let cfg = config(0.1);
        let mut p = vec![1.5, -2.0];
        let mut state = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut state, &cfg).unwrap();
        assert_eq!(p, vec![1.5, -2.0]);
        assert_eq!(state.t, 1);
    }

    #[test]
    fn descends_a_simple_quadratic() {
        // f(p) = p^2, gradient 2p. Adam should walk |p| from 3 toward 0.
        let cfg = config(0.1);
        let mut p = vec![3.0];
        let mut state = AdamState::new(1);
        for _ in 0..200 {
            let g = 2.0 * p[0];
            adam_step(&mut p, &[g], &mut state, &cfg).unwrap();
        }
        assert!(p[0].abs() < 0.5, "p = {}", p[0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = config(0.1);
        let mut p = vec![1.0, 2.0];
        let mut state = AdamState::new(2);
        assert!(matches!(
            adam_step(&mut p, &[0.1], &mut state, &cfg),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            adam_step(&mut p, &[0.1, f64::NAN], &mut state, &cfg),
            Err(Error::NonFiniteInput)
        ));
        // Failed calls must not advance the step counter.
        assert_eq!(state.t, 0);
    }
}

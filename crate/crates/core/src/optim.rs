//! Adam optimizer with decoupled weight decay, operating on flat parameter
//! vectors.

use alloc::vec;
use alloc::vec::Vec;

use crate::fp;

/// AdamW over a flat parameter vector.
///
/// Bias-correction powers are kept as running products so no `powi` is
/// needed and the update is bit-reproducible.
#[derive(Debug, Clone)]
pub struct AdamW {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    beta1_power: f64,
    beta2_power: f64,
}

impl AdamW {
    /// Standard defaults: beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8.
    pub fn new(param_count: usize, learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            beta1_power: 1.0,
            beta2_power: 1.0,
        }
    }

    /// One update over all parameters; decay is decoupled from the moment
    /// estimates and scales with the learning rate.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert!(
            params.len() == self.m.len() && grads.len() == self.m.len(),
            "optimizer state for {} params, got {} params / {} grads",
            self.m.len(),
            params.len(),
            grads.len()
        );
        self.beta1_power *= self.beta1;
        self.beta2_power *= self.beta2;
        let bc1 = 1.0 - self.beta1_power;
        let bc2 = 1.0 - self.beta2_power;
        for i in 0..params.len() {
            if self.weight_decay != 0.0 {
                params[i] *= 1.0 - self.learning_rate * self.weight_decay;
            }
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.learning_rate * m_hat / (fp::sqrt(v_hat) + self.epsilon);
        }
    }
}

//! Numerical gradient checking: central finite differences over the flat
//! parameter vector, compared against the analytic backward pass.

use alloc::vec::Vec;

use crate::math::Matrix;
use crate::train::{EntropyNetwork, TrainConfig};

pub const DEFAULT_STEP: f64 = 1e-5;

/// Relative error with a small floor so near-zero gradients compare by
/// absolute difference.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(1e-4);
    (a - b).abs() / scale
}

/// Central-difference gradient of the total loss for every parameter.
pub fn numerical_grad(
    network: &EntropyNetwork,
    concepts: &Matrix,
    targets: &[Vec<bool>],
    config: &TrainConfig,
    step: f64,
) -> Vec<f64> {
    let base = network.params_flat();
    let mut probe = network.clone();
    let mut grads = Vec::with_capacity(base.len());
    let mut params = base.clone();
    for i in 0..base.len() {
        params[i] = base[i] + step;
        probe.load_params(&params);
        let (plus, _) = probe.evaluate_loss(concepts, targets, config);
        params[i] = base[i] - step;
        probe.load_params(&params);
        let (minus, _) = probe.evaluate_loss(concepts, targets, config);
        params[i] = base[i];
        grads.push((plus.total - minus.total) / (2.0 * step));
    }
    grads
}

/// Worst-parameter comparison of analytic and numerical gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_index: usize,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
}

pub fn compare_gradients(
    network: &EntropyNetwork,
    concepts: &Matrix,
    targets: &[Vec<bool>],
    config: &TrainConfig,
    step: f64,
) -> GradCheckReport {
    let (_, analytic) = network.loss_and_grads(concepts, targets, config);
    let numeric = numerical_grad(network, concepts, targets, config, step);
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_index: 0,
        analytic_at_worst: 0.0,
        numeric_at_worst: 0.0,
    };
    for i in 0..analytic.len() {
        let err = relative_error(analytic[i], numeric[i]);
        if err > report.max_relative_error {
            report.max_relative_error = err;
            report.worst_index = i;
            report.analytic_at_worst = analytic[i];
            report.numeric_at_worst = numeric[i];
        }
    }
    report
}

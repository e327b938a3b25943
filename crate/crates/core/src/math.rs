//! Dense real-vector/matrix arithmetic, activations, and numerically stable
//! reductions.
//!
//! All reductions run sequentially in a fixed order so results are
//! bit-reproducible for a given seed. Values are `f64` throughout.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fp;

/// Row-major dense matrix of finite `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, validating shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                what: "matrix data",
                left: data.len(),
                right: rows * cols,
            });
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!(
                "non-finite matrix entry at flat index {bad}"
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r}, {c}) out of bounds for {}x{} matrix",
            self.rows,
            self.cols
        );
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r}, {c}) out of bounds for {}x{} matrix",
            self.rows,
            self.cols
        );
        self.data[r * self.cols + c] = v;
    }

    /// Borrow row `r` as a slice.
    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        assert!(r < self.rows, "row {r} out of bounds for {} rows", self.rows);
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        assert!(r < self.rows, "row {r} out of bounds for {} rows", self.rows);
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// `W x + b`, the affine map used by every linear layer.
///
/// Panics on dimension mismatch, reporting the offending shapes.
pub fn affine(w: &Matrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    assert!(
        w.cols() == x.len() && w.rows() == b.len(),
        "affine shape mismatch: W is {}x{}, x has {}, b has {}",
        w.rows(),
        w.cols(),
        x.len(),
        b.len()
    );
    let mut out = Vec::with_capacity(w.rows());
    for r in 0..w.rows() {
        let row = w.row(r);
        let mut acc = 0.0;
        for (wv, xv) in row.iter().zip(x.iter()) {
            acc += wv * xv;
        }
        out.push(acc + b[r]);
    }
    out
}

/// Softmax of `v / tau`, computed in log-space with max-subtraction so large
/// scores or small temperatures do not overflow.
pub fn softmax_with_temperature(v: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidConfig(alloc::format!(
            "temperature must be a positive finite real, got {tau}"
        )));
    }
    assert!(!v.is_empty(), "softmax of an empty vector");
    let scaled: Vec<f64> = v.iter().map(|x| x / tau).collect();
    let mut max = scaled[0];
    for &s in &scaled[1..] {
        if s > max {
            max = s;
        }
    }
    let mut out: Vec<f64> = scaled.iter().map(|&s| fp::exp(s - max)).collect();
    let mut sum = 0.0;
    for &e in &out {
        sum += e;
    }
    for e in &mut out {
        *e /= sum;
    }
    Ok(out)
}

/// Log-sum-exp with max-subtraction; companion to the stable softmax.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    assert!(!v.is_empty(), "log_sum_exp of an empty vector");
    let mut max = v[0];
    for &s in &v[1..] {
        if s > max {
            max = s;
        }
    }
    let mut sum = 0.0;
    for &s in v {
        sum += fp::exp(s - max);
    }
    max + fp::ln(sum)
}

/// Sum of absolute values down column `j`.
///
/// Panics if `j` is out of range.
pub fn l1_column_norm(w: &Matrix, j: usize) -> f64 {
    assert!(
        j < w.cols(),
        "column {j} out of range for {}x{} matrix",
        w.rows(),
        w.cols()
    );
    let mut acc = 0.0;
    for r in 0..w.rows() {
        acc += fp::abs(w.get(r, j));
    }
    acc
}

/// First argmax index; ties resolve to the lowest index for determinism.
pub fn argmax(v: &[f64]) -> usize {
    assert!(!v.is_empty(), "argmax of an empty vector");
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

#[inline]
pub fn relu_prime(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

#[inline]
pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

#[inline]
pub fn leaky_relu_prime(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        slope
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + fp::exp(-x))
}

#[inline]
pub fn sigmoid_prime(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 - s)
}

/// Nonlinearity applied after the hidden linear layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    LeakyRelu { slope: f64 },
}

impl Activation {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Relu => relu(x),
            Activation::LeakyRelu { slope } => leaky_relu(x, *slope),
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Activation::Relu => relu_prime(x),
            Activation::LeakyRelu { slope } => leaky_relu_prime(x, *slope),
        }
    }
}

impl Default for Activation {
    fn default() -> Self {
        Activation::LeakyRelu { slope: 0.01 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn affine_identity_passes_input_through() {
        let w = Matrix::identity(2);
        let out = affine(&w, &[0.3, 0.7], &[0.0, 0.0]);
        assert_eq!(out, vec![0.3, 0.7]);
    }

    #[test]
    fn affine_zero_input_returns_bias() {
        let w = Matrix::new(2, 3, vec![1.0, -2.0, 3.0, 0.5, 0.25, -1.0]).unwrap();
        let out = affine(&w, &[0.0, 0.0, 0.0], &[1.5, -2.0]);
        assert_eq!(out, vec![1.5, -2.0]);
    }

    #[test]
    fn affine_matches_triple_loop_oracle() {
        // Independent naive oracle: explicit element-wise loops.
        let mut rng = crate::rng::seeded(7);
        let w = crate::rng::random_matrix(&mut rng, 4, 3, 2.0);
        let x: Vec<f64> = (0..3).map(|_| crate::rng::uniform(&mut rng, -1.0, 1.0)).collect();
        let b: Vec<f64> = (0..4).map(|_| crate::rng::uniform(&mut rng, -1.0, 1.0)).collect();

        let mut expected = vec![0.0; 4];
        for i in 0..4 {
            expected[i] = b[i];
            for j in 0..3 {
                expected[i] += w.get(i, j) * x[j];
            }
        }

        let got = affine(&w, &x, &b);
        for (g, e) in got.iter().zip(expected.iter()) {
            assert_close(*g, *e, 1e-12);
        }
    }

    #[test]
    #[should_panic(expected = "affine shape mismatch")]
    fn affine_rejects_bad_shapes() {
        let w = Matrix::zeros(2, 3);
        affine(&w, &[1.0, 2.0], &[0.0, 0.0]);
    }

    #[test]
    fn softmax_uniform_on_equal_scores() {
        let out = softmax_with_temperature(&[1.0, 1.0, 1.0], 0.7).unwrap();
        for &p in &out {
            assert_close(p, 1.0 / 3.0, 1e-15);
        }
    }

    #[test]
    fn softmax_matches_scalar_evaluation() {
        // Direct scalar evaluation with plain exponentials.
        let v = [2.0, 1.0, 0.0];
        let z = fp::exp(2.0) + fp::exp(1.0) + fp::exp(0.0);
        let expected = [fp::exp(2.0) / z, fp::exp(1.0) / z, fp::exp(0.0) / z];
        let out = softmax_with_temperature(&v, 1.0).unwrap();
        for (o, e) in out.iter().zip(expected.iter()) {
            assert_close(*o, *e, 1e-12);
        }
        // Frozen reference values.
        assert_close(out[0], 0.66524, 1e-4);
        assert_close(out[1], 0.24473, 1e-4);
        assert_close(out[2], 0.09003, 1e-4);
    }

    #[test]
    fn softmax_survives_huge_scores() {
        let out = softmax_with_temperature(&[1000.0, 0.0], 1.0).unwrap();
        assert!(out.iter().all(|p| p.is_finite()));
        assert_close(out[0], 1.0, 1e-12);
        assert_close(out[1], 0.0, 1e-12);
    }

    #[test]
    fn softmax_rejects_nonpositive_temperature() {
        assert!(softmax_with_temperature(&[1.0], 0.0).is_err());
        assert!(softmax_with_temperature(&[1.0], -1.0).is_err());
    }

    #[test]
    fn l1_column_norm_sums_absolute_values() {
        let w = Matrix::new(3, 1, vec![0.5, -0.5, 1.0]).unwrap();
        assert_eq!(l1_column_norm(&w, 0), 2.0);
    }

    #[test]
    fn l1_column_norm_zero_column() {
        let w = Matrix::zeros(4, 2);
        assert_eq!(l1_column_norm(&w, 1), 0.0);
    }

    #[test]
    fn l1_column_norm_matches_loop_oracle() {
        let mut rng = crate::rng::seeded(11);
        let w = crate::rng::random_matrix(&mut rng, 10, 6, 3.0);
        for j in 0..6 {
            let mut expected = 0.0;
            for i in 0..10 {
                let v = w.get(i, j);
                expected += if v < 0.0 { -v } else { v };
            }
            assert_close(l1_column_norm(&w, j), expected, 1e-12);
        }
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn l1_column_norm_rejects_bad_column() {
        let w = Matrix::zeros(2, 2);
        l1_column_norm(&w, 2);
    }

    #[test]
    fn activation_values() {
        assert_eq!(relu(-1.0), 0.0);
        assert_eq!(relu(2.0), 2.0);
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(leaky_relu(-2.0, 0.01), -0.02);
        assert_eq!(leaky_relu(3.0, 0.01), 3.0);
    }

    #[test]
    fn derivatives_match_central_differences() {
        // Central finite differences, step 1e-5, away from the kinks.
        let h = 1e-5;
        let mut rng = crate::rng::seeded(23);
        let fd = |f: &dyn Fn(f64) -> f64, x: f64| (f(x + h) - f(x - h)) / (2.0 * h);
        for _ in 0..20 {
            let mut x = crate::rng::uniform(&mut rng, -4.0, 4.0);
            if x.abs() < 1e-3 {
                x += 0.1;
            }
            assert_close(relu_prime(x), fd(&|v| relu(v), x), 1e-6);
            assert_close(
                leaky_relu_prime(x, 0.01),
                fd(&|v| leaky_relu(v, 0.01), x),
                1e-6,
            );
            assert_close(sigmoid_prime(x), fd(&|v| sigmoid(v), x), 1e-6);
        }
    }

    #[test]
    fn affine_is_linear() {
        let mut rng = crate::rng::seeded(31);
        let w = crate::rng::random_matrix(&mut rng, 5, 4, 1.0);
        let x: Vec<f64> = (0..4).map(|_| crate::rng::uniform(&mut rng, -1.0, 1.0)).collect();
        let y: Vec<f64> = (0..4).map(|_| crate::rng::uniform(&mut rng, -1.0, 1.0)).collect();
        let a = 1.7;
        let zeros = vec![0.0; 5];

        let combo: Vec<f64> = x.iter().zip(y.iter()).map(|(xv, yv)| a * xv + yv).collect();
        let lhs = affine(&w, &combo, &zeros);
        let fx = affine(&w, &x, &zeros);
        let fy = affine(&w, &y, &zeros);
        for i in 0..5 {
            assert_close(lhs[i], a * fx[i] + fy[i], 1e-10);
        }
    }
}

//! Multi-head network assembly, loss, manual reverse-mode gradients, and
//! full-batch AdamW training with optional early stopping.
//!
//! Every class owns a private stack: an entropy-gated first layer followed
//! by fully-connected hidden layers and one scalar output unit. The task
//! loss is a softmax cross-entropy across the per-class scalar outputs
//! (targets with several true bits are normalized into a distribution);
//! per-class sigmoids are used only for thresholded boolean outputs.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::ConceptDataset;
use crate::entropy::{compute_scores, ConceptScores, EntropyHead};
use crate::error::{Error, Result};
use crate::fp;
use crate::math::{self, Activation, Matrix};
use crate::optim::AdamW;
use crate::rng;

/// Which sparsity penalty accompanies the task loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizerKind {
    /// Entropy of each head's attention distribution.
    Entropy,
    /// Sum of each head's relevance scores (an L1 penalty on the gate
    /// weights), kept as an ablation alternative.
    L1,
    /// Task loss only.
    None,
}

/// How the per-class scalar outputs couple into the task loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskLossKind {
    /// Softmax cross-entropy across the class logits; multi-hot target rows
    /// normalize into a distribution. The fit for single-label data.
    SoftmaxCrossEntropy,
    /// Independent sigmoid cross-entropy per class head. The fit for
    /// complement-pair targets, where several classes hold at once and the
    /// heads must saturate rather than an equilibrium across pairs.
    PerClassSigmoid,
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Weight of the sparsity penalty.
    pub lambda: f64,
    /// Softmax temperature of the entropy layer.
    pub tau: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Threshold shared by concept binarization, gate masking and boolean
    /// network outputs.
    pub epsilon: f64,
    pub regularizer: RegularizerKind,
    pub task_loss: TaskLossKind,
    pub seed: u64,
    /// Restore the parameters with the best validation accuracy.
    pub early_stopping: bool,
    pub weight_decay: f64,
    /// Hidden layer widths; the first entry is the entropy layer width.
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            tau: 0.7,
            learning_rate: 1e-2,
            max_epochs: 200,
            epsilon: 0.5,
            regularizer: RegularizerKind::Entropy,
            task_loss: TaskLossKind::SoftmaxCrossEntropy,
            seed: 0,
            early_stopping: true,
            weight_decay: 0.0,
            hidden: vec![10],
            activation: Activation::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "lambda must be a nonnegative real, got {}",
                self.lambda
            )));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie strictly inside (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.weight_decay >= 0.0) || !self.weight_decay.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "weight decay must be nonnegative, got {}",
                self.weight_decay
            )));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidConfig(
                "hidden layer widths must be non-empty and positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// One fully-connected layer of a class trunk.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Private per-class stack: gated first layer plus trunk ending in one
/// scalar output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassNet {
    pub head: EntropyHead,
    pub trunk: Vec<DenseLayer>,
}

/// One independent head per target class; heads never share layers.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyNetwork {
    concepts: usize,
    activation: Activation,
    heads: Vec<ClassNet>,
}

impl EntropyNetwork {
    /// Seeded uniform fan-in initialization: every weight and bias of a
    /// layer with `fan_in` inputs is drawn from `[-1/sqrt(fan_in),
    /// 1/sqrt(fan_in))`. Heads fill in class order, layers in depth order,
    /// weights row-major, so a seed pins every parameter.
    pub fn new(concepts: usize, classes: usize, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        if concepts == 0 || classes == 0 {
            return Err(Error::InvalidConfig(
                "network needs at least one concept and one class".to_string(),
            ));
        }
        let mut rng = rng::seeded(config.seed);
        let mut heads = Vec::with_capacity(classes);
        for class_index in 0..classes {
            let mut widths = Vec::with_capacity(config.hidden.len() + 1);
            widths.extend_from_slice(&config.hidden);
            widths.push(1);

            // The gate layer starts at zero: every column norm ties at 0,
            // the attention starts uniform and the gate fully open, so the
            // relevance race is decided by the data rather than by which
            // column drew the largest initial weights. Symmetry is broken
            // by the randomly initialized trunk behind it.
            let w = Matrix::zeros(widths[0], concepts);
            let b = alloc::vec![0.0; widths[0]];
            let head = EntropyHead::new(class_index, w, b, config.tau)?;

            let mut trunk = Vec::with_capacity(widths.len() - 1);
            for l in 1..widths.len() {
                let fan_in = widths[l - 1];
                let bound = fp::sqrt(6.0 / fan_in as f64);
                let w = rng::random_matrix(&mut rng, widths[l], fan_in, bound);
                let b: Vec<f64> =
                    (0..widths[l]).map(|_| rng::uniform(&mut rng, -bound, bound)).collect();
                trunk.push(DenseLayer { weights: w, bias: b });
            }
            heads.push(ClassNet { head, trunk });
        }
        Ok(Self {
            concepts,
            activation: config.activation,
            heads,
        })
    }

    /// Rebuilds a network from explicit per-class stacks (model loading,
    /// hand-constructed fixtures). Shapes are validated head by head.
    pub fn from_parts(heads: Vec<ClassNet>, activation: Activation) -> Result<Self> {
        if heads.is_empty() {
            return Err(Error::InvalidConfig("network has no heads".to_string()));
        }
        let concepts = heads[0].head.concepts();
        for (i, class_net) in heads.iter().enumerate() {
            if class_net.head.concepts() != concepts {
                return Err(Error::LengthMismatch {
                    what: "head concept width",
                    left: class_net.head.concepts(),
                    right: concepts,
                });
            }
            let mut width = class_net.head.hidden_units();
            for layer in &class_net.trunk {
                if layer.weights.cols() != width {
                    return Err(Error::LengthMismatch {
                        what: "trunk layer input width",
                        left: layer.weights.cols(),
                        right: width,
                    });
                }
                if layer.bias.len() != layer.weights.rows() {
                    return Err(Error::LengthMismatch {
                        what: "trunk layer bias",
                        left: layer.bias.len(),
                        right: layer.weights.rows(),
                    });
                }
                width = layer.weights.rows();
            }
            if width != 1 {
                return Err(Error::InvalidConfig(format!(
                    "head {i} must end in one scalar output unit, ends in {width}"
                )));
            }
        }
        Ok(Self {
            concepts,
            activation,
            heads,
        })
    }

    pub fn concept_count(&self) -> usize {
        self.concepts
    }

    pub fn class_count(&self) -> usize {
        self.heads.len()
    }

    pub fn heads(&self) -> &[ClassNet] {
        &self.heads
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Current relevance/attention/gate scores, one per class head.
    pub fn scores(&self) -> Vec<ConceptScores> {
        self.heads.iter().map(|h| compute_scores(&h.head)).collect()
    }

    pub fn param_count(&self) -> usize {
        self.heads
            .iter()
            .map(|h| {
                let head = h.head.weights.rows() * h.head.weights.cols() + h.head.bias.len();
                let trunk: usize = h
                    .trunk
                    .iter()
                    .map(|l| l.weights.rows() * l.weights.cols() + l.bias.len())
                    .sum();
                head + trunk
            })
            .sum()
    }

    /// Flattens all parameters: heads in class order, per head the gate
    /// layer (weights row-major, then bias) followed by each trunk layer.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for h in &self.heads {
            out.extend_from_slice(h.head.weights.data());
            out.extend_from_slice(&h.head.bias);
            for layer in &h.trunk {
                out.extend_from_slice(layer.weights.data());
                out.extend_from_slice(&layer.bias);
            }
        }
        out
    }

    /// Inverse of [`params_flat`](Self::params_flat).
    pub fn load_params(&mut self, params: &[f64]) {
        assert!(
            params.len() == self.param_count(),
            "expected {} params, got {}",
            self.param_count(),
            params.len()
        );
        let mut cursor = 0usize;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&params[cursor..cursor + dst.len()]);
            cursor += dst.len();
        };
        for h in &mut self.heads {
            take(h.head.weights.data_mut());
            take(&mut h.head.bias);
            for layer in &mut h.trunk {
                take(layer.weights.data_mut());
                take(&mut layer.bias);
            }
        }
    }

    /// Raw scalar output (logit) of one class head for a single sample.
    pub fn head_logit(&self, class: usize, concepts: &[f64]) -> f64 {
        assert!(class < self.heads.len(), "class {class} out of range");
        assert!(
            concepts.len() == self.concepts,
            "sample has {} concepts, network expects {}",
            concepts.len(),
            self.concepts
        );
        let h = &self.heads[class];
        let scores = compute_scores(&h.head);
        let gated: Vec<f64> = concepts
            .iter()
            .zip(scores.gate.iter())
            .map(|(c, g)| c * g)
            .collect();
        let mut x = math::affine(&h.head.weights, &gated, &h.head.bias);
        for v in &mut x {
            *v = self.activation.apply(*v);
        }
        for (li, layer) in h.trunk.iter().enumerate() {
            x = math::affine(&layer.weights, &x, &layer.bias);
            if li + 1 < h.trunk.len() {
                for v in &mut x {
                    *v = self.activation.apply(*v);
                }
            }
        }
        x[0]
    }

    /// Class membership score in `[0, 1]` (sigmoid of the head logit).
    pub fn class_score(&self, class: usize, concepts: &[f64]) -> f64 {
        math::sigmoid(self.head_logit(class, concepts))
    }

    /// Logits for a whole batch, `samples x classes`.
    pub fn logits(&self, concepts: &Matrix) -> Matrix {
        let n = concepts.rows();
        let r = self.heads.len();
        let mut out = Matrix::zeros(n, r);
        for class in 0..r {
            let h = &self.heads[class];
            let scores = compute_scores(&h.head);
            for s in 0..n {
                let sample = concepts.row(s);
                let gated: Vec<f64> = sample
                    .iter()
                    .zip(scores.gate.iter())
                    .map(|(c, g)| c * g)
                    .collect();
                let mut x = math::affine(&h.head.weights, &gated, &h.head.bias);
                for v in &mut x {
                    *v = self.activation.apply(*v);
                }
                for (li, layer) in h.trunk.iter().enumerate() {
                    x = math::affine(&layer.weights, &x, &layer.bias);
                    if li + 1 < h.trunk.len() {
                        for v in &mut x {
                            *v = self.activation.apply(*v);
                        }
                    }
                }
                out.set(s, class, x[0]);
            }
        }
        out
    }
}

/// `-sum a_j ln a_j` with the convention `0 ln 0 = 0` (natural logarithm).
pub fn entropy_of_distribution(alpha: &[f64]) -> f64 {
    let mut h = 0.0;
    for &a in alpha {
        debug_assert!(a >= 0.0, "entropy of a negative probability {a}");
        if a > 0.0 {
            h -= a * fp::ln(a);
        }
    }
    h
}

/// Loss components: `total = task + lambda * regularizer`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub task: f64,
    pub regularizer: f64,
}

fn normalized_target_row(targets: &[bool]) -> Vec<f64> {
    let truths = targets.iter().filter(|&&t| t).count();
    debug_assert!(truths > 0, "target row with no true class");
    let w = 1.0 / truths as f64;
    targets.iter().map(|&t| if t { w } else { 0.0 }).collect()
}

fn check_task_shapes(logits: &Matrix, targets: &[Vec<bool>]) {
    assert!(
        logits.rows() == targets.len(),
        "task loss shape mismatch: {} logit rows vs {} target rows",
        logits.rows(),
        targets.len()
    );
    for (s, t) in targets.iter().enumerate() {
        assert!(
            logits.cols() == t.len(),
            "task loss shape mismatch: {} logits vs {} targets in row {s}",
            logits.cols(),
            t.len()
        );
    }
}

fn cross_entropy_mean(logits: &Matrix, targets: &[Vec<bool>]) -> f64 {
    check_task_shapes(logits, targets);
    let n = logits.rows();
    let mut acc = 0.0;
    for s in 0..n {
        let row = logits.row(s);
        let lse = math::log_sum_exp(row);
        let t = normalized_target_row(&targets[s]);
        for i in 0..row.len() {
            if t[i] > 0.0 {
                acc -= t[i] * (row[i] - lse);
            }
        }
    }
    acc / n as f64
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + fp::ln(1.0 + fp::exp(-x))
    } else {
        fp::ln(1.0 + fp::exp(x))
    }
}

/// Element-mean sigmoid cross-entropy over every (sample, class) pair.
fn sigmoid_bce_mean(logits: &Matrix, targets: &[Vec<bool>]) -> f64 {
    check_task_shapes(logits, targets);
    let n = logits.rows();
    let r = logits.cols();
    let mut acc = 0.0;
    for s in 0..n {
        let row = logits.row(s);
        for (i, &o) in row.iter().enumerate() {
            let t = if targets[s][i] { 1.0 } else { 0.0 };
            acc += softplus(o) - t * o;
        }
    }
    acc / (n * r) as f64
}

fn task_loss_value(kind: TaskLossKind, logits: &Matrix, targets: &[Vec<bool>]) -> f64 {
    match kind {
        TaskLossKind::SoftmaxCrossEntropy => cross_entropy_mean(logits, targets),
        TaskLossKind::PerClassSigmoid => sigmoid_bce_mean(logits, targets),
    }
}

fn regularizer_value(kind: RegularizerKind, scores: &[ConceptScores]) -> f64 {
    match kind {
        RegularizerKind::Entropy => scores
            .iter()
            .map(|s| entropy_of_distribution(&s.attention))
            .sum(),
        RegularizerKind::L1 => scores
            .iter()
            .map(|s| s.relevance.iter().sum::<f64>())
            .sum(),
        RegularizerKind::None => 0.0,
    }
}

/// Combined loss on explicit predictions: softmax cross-entropy over the
/// per-class logits plus the weighted sparsity penalty.
pub fn total_loss(
    logits: &Matrix,
    targets: &[Vec<bool>],
    scores: &[ConceptScores],
    config: &TrainConfig,
) -> f64 {
    let task = task_loss_value(config.task_loss, logits, targets);
    task + config.lambda * regularizer_value(config.regularizer, scores)
}

impl EntropyNetwork {
    /// Forward pass returning loss components and the batch logits.
    pub fn evaluate_loss(
        &self,
        concepts: &Matrix,
        targets: &[Vec<bool>],
        config: &TrainConfig,
    ) -> (LossParts, Matrix) {
        let logits = self.logits(concepts);
        let task = task_loss_value(config.task_loss, &logits, targets);
        let reg = regularizer_value(config.regularizer, &self.scores());
        (
            LossParts {
                total: task + config.lambda * reg,
                task,
                regularizer: reg,
            },
            logits,
        )
    }

    /// Loss plus exact analytic gradients for every parameter, flattened in
    /// [`params_flat`](Self::params_flat) order.
    ///
    /// The gradient follows both paths through the gate layer weights: the
    /// affine term (weights applied to the gated input) and the gating term
    /// (the gate itself is a function of the weight column norms), plus the
    /// regularizer path.
    pub fn loss_and_grads(
        &self,
        concepts: &Matrix,
        targets: &[Vec<bool>],
        config: &TrainConfig,
    ) -> (LossParts, Vec<f64>) {
        let n = concepts.rows();
        let r = self.heads.len();
        assert!(n > 0, "gradient of an empty batch");
        assert!(
            concepts.cols() == self.concepts,
            "batch has {} concepts, network expects {}",
            concepts.cols(),
            self.concepts
        );

        // Forward with caches.
        let mut all_scores = Vec::with_capacity(r);
        let mut gated_cache: Vec<Vec<Vec<f64>>> = Vec::with_capacity(r);
        let mut pre_cache: Vec<Vec<Vec<Vec<f64>>>> = Vec::with_capacity(r);
        let mut post_cache: Vec<Vec<Vec<Vec<f64>>>> = Vec::with_capacity(r);
        let mut logits = Matrix::zeros(n, r);

        for class in 0..r {
            let h = &self.heads[class];
            let scores = compute_scores(&h.head);
            let layer_count = 1 + h.trunk.len();
            let mut gated_rows = Vec::with_capacity(n);
            let mut pre_rows: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(n); layer_count];
            let mut post_rows: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(n); layer_count];

            for s in 0..n {
                let sample = concepts.row(s);
                let gated: Vec<f64> = sample
                    .iter()
                    .zip(scores.gate.iter())
                    .map(|(c, g)| c * g)
                    .collect();

                let mut x = gated.clone();
                gated_rows.push(gated);
                for li in 0..layer_count {
                    let (w, b) = if li == 0 {
                        (&h.head.weights, &h.head.bias)
                    } else {
                        (&h.trunk[li - 1].weights, &h.trunk[li - 1].bias)
                    };
                    let z = math::affine(w, &x, b);
                    let a: Vec<f64> = if li + 1 == layer_count {
                        z.clone()
                    } else {
                        z.iter().map(|&v| self.activation.apply(v)).collect()
                    };
                    pre_rows[li].push(z);
                    post_rows[li].push(a.clone());
                    x = a;
                }
                logits.set(s, class, x[0]);
            }
            all_scores.push(scores);
            gated_cache.push(gated_rows);
            pre_cache.push(pre_rows);
            post_cache.push(post_rows);
        }

        let task = task_loss_value(config.task_loss, &logits, targets);
        let reg = regularizer_value(config.regularizer, &all_scores);
        let parts = LossParts {
            total: task + config.lambda * reg,
            task,
            regularizer: reg,
        };

        // Task gradient w.r.t. the logits.
        let mut dlogits = Matrix::zeros(n, r);
        for s in 0..n {
            let row = logits.row(s);
            match config.task_loss {
                TaskLossKind::SoftmaxCrossEntropy => {
                    let lse = math::log_sum_exp(row);
                    let t = normalized_target_row(&targets[s]);
                    for i in 0..r {
                        let p = fp::exp(row[i] - lse);
                        dlogits.set(s, i, (p - t[i]) / n as f64);
                    }
                }
                TaskLossKind::PerClassSigmoid => {
                    for i in 0..r {
                        let t = if targets[s][i] { 1.0 } else { 0.0 };
                        dlogits.set(s, i, (math::sigmoid(row[i]) - t) / (n * r) as f64);
                    }
                }
            }
        }

        // Backward per head into the flat gradient vector.
        let mut grads = vec![0.0; self.param_count()];
        let mut offset = 0usize;
        for class in 0..r {
            let h = &self.heads[class];
            let scores = &all_scores[class];
            let layer_count = 1 + h.trunk.len();
            let k = self.concepts;
            let head_w_len = h.head.weights.rows() * h.head.weights.cols();
            let head_b_len = h.head.bias.len();

            // Flat sub-slices for this head, in params_flat order.
            let mut layer_offsets = Vec::with_capacity(layer_count);
            let mut cursor = offset;
            layer_offsets.push(cursor);
            cursor += head_w_len + head_b_len;
            for layer in &h.trunk {
                layer_offsets.push(cursor);
                cursor += layer.weights.rows() * layer.weights.cols() + layer.bias.len();
            }
            let head_total = cursor - offset;

            let mut dgate_acc = vec![0.0; k];
            for s in 0..n {
                // Delta at the scalar output (final layer is linear).
                let mut delta = vec![dlogits.get(s, class)];
                for li in (0..layer_count).rev() {
                    let (w, rows, cols) = if li == 0 {
                        (&h.head.weights, h.head.weights.rows(), h.head.weights.cols())
                    } else {
                        let lw = &h.trunk[li - 1].weights;
                        (lw, lw.rows(), lw.cols())
                    };
                    let input: &[f64] = if li == 0 {
                        &gated_cache[class][s]
                    } else {
                        &post_cache[class][li - 1][s]
                    };

                    let base = layer_offsets[li];
                    for a in 0..rows {
                        let ga = delta[a];
                        if ga != 0.0 {
                            let wrow = base + a * cols;
                            for j in 0..cols {
                                grads[wrow + j] += ga * input[j];
                            }
                        }
                        grads[base + rows * cols + a] += ga;
                    }

                    // Propagate to the layer input.
                    let mut dinput = vec![0.0; cols];
                    for a in 0..rows {
                        let ga = delta[a];
                        if ga != 0.0 {
                            let wrow = w.row(a);
                            for j in 0..cols {
                                dinput[j] += wrow[j] * ga;
                            }
                        }
                    }
                    if li == 0 {
                        let sample = concepts.row(s);
                        for j in 0..k {
                            dgate_acc[j] += dinput[j] * sample[j];
                        }
                    } else {
                        let pre = &pre_cache[class][li - 1][s];
                        delta = dinput
                            .iter()
                            .zip(pre.iter())
                            .map(|(d, &z)| d * self.activation.derivative(z))
                            .collect();
                    }
                }
            }

            // Gate path: gate = attention / max(attention), attention is the
            // temperature softmax of the weight column norms.
            let alpha = &scores.attention;
            let jmax = math::argmax(alpha);
            let max = alpha[jmax];
            let mut dalpha = vec![0.0; k];
            let mut through_max = 0.0;
            for j in 0..k {
                dalpha[j] += dgate_acc[j] / max;
                through_max += dgate_acc[j] * alpha[j];
            }
            dalpha[jmax] -= through_max / (max * max);

            // Softmax backward to the scaled scores.
            let mut inner = 0.0;
            for j in 0..k {
                inner += dalpha[j] * alpha[j];
            }
            let mut dscaled: Vec<f64> = (0..k).map(|j| alpha[j] * (dalpha[j] - inner)).collect();

            if config.regularizer == RegularizerKind::Entropy && config.lambda != 0.0 {
                // d/ds of -sum a ln a, computed in score space so vanishing
                // probabilities stay finite: dH/ds_j = -a_j (ln a_j + H).
                let scaled: Vec<f64> = scores.relevance.iter().map(|&g| g / h.head.tau).collect();
                let lse = math::log_sum_exp(&scaled);
                let entropy = entropy_of_distribution(alpha);
                for j in 0..k {
                    let ln_a = scaled[j] - lse;
                    dscaled[j] += config.lambda * (-(alpha[j]) * (ln_a + entropy));
                }
            }

            let mut drelevance: Vec<f64> = dscaled.iter().map(|&d| d / h.head.tau).collect();
            if config.regularizer == RegularizerKind::L1 {
                for d in &mut drelevance {
                    *d += config.lambda;
                }
            }

            // Column norms: d|w|/dw = sign(w), zero at zero.
            let rows0 = h.head.weights.rows();
            for a in 0..rows0 {
                let wrow = h.head.weights.row(a);
                let base = offset + a * k;
                for j in 0..k {
                    grads[base + j] += drelevance[j] * fp::sign(wrow[j]);
                }
            }

            offset += head_total;
        }

        (parts, grads)
    }
}

/// Per-epoch training record. All values are measured at the parameters
/// reached after that epoch's update.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub total_loss: f64,
    pub task_loss: f64,
    pub regularizer_value: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

/// Training trace plus the index of the restored snapshot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// Epoch (0-based) whose parameters maximize validation accuracy;
    /// ties resolve to the earliest epoch. `None` when no epoch ran.
    pub best_epoch: Option<usize>,
}

/// Fraction of samples whose argmax logit lands on a true target class.
pub fn label_accuracy(logits: &Matrix, targets: &[Vec<bool>]) -> f64 {
    assert!(logits.rows() == targets.len() && logits.rows() > 0);
    let mut correct = 0usize;
    for s in 0..logits.rows() {
        let predicted = math::argmax(logits.row(s));
        if targets[s][predicted] {
            correct += 1;
        }
    }
    correct as f64 / logits.rows() as f64
}

/// Full-batch AdamW training with best-validation snapshotting.
///
/// Losses and accuracies are recorded after each update; the snapshot with
/// the highest validation accuracy (earliest epoch on ties) is restored when
/// early stopping is enabled. `max_epochs == 0` returns the network
/// untouched with an empty history.
pub fn train(
    mut network: EntropyNetwork,
    train_set: &ConceptDataset,
    val_set: &ConceptDataset,
    config: &TrainConfig,
) -> Result<(EntropyNetwork, TrainHistory)> {
    config.validate()?;
    if train_set.concept_count() != network.concept_count() {
        return Err(Error::LengthMismatch {
            what: "training concepts vs network",
            left: train_set.concept_count(),
            right: network.concept_count(),
        });
    }
    if train_set.class_count() != network.class_count() {
        return Err(Error::LengthMismatch {
            what: "training classes vs network",
            left: train_set.class_count(),
            right: network.class_count(),
        });
    }

    let mut history = TrainHistory::default();
    if config.max_epochs == 0 {
        return Ok((network, history));
    }

    let mut optimizer = AdamW::new(
        network.param_count(),
        config.learning_rate,
        config.weight_decay,
    );
    let mut best: Option<(f64, usize, Vec<f64>)> = None;

    for epoch in 0..config.max_epochs {
        let (parts, grads) =
            network.loss_and_grads(&train_set.concepts, &train_set.targets, config);
        if !parts.total.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                total: parts.total,
                task: parts.task,
                regularizer: parts.regularizer,
            });
        }
        let mut params = network.params_flat();
        optimizer.step(&mut params, &grads);
        network.load_params(&params);

        let (post_parts, train_logits) =
            network.evaluate_loss(&train_set.concepts, &train_set.targets, config);
        let train_accuracy = label_accuracy(&train_logits, &train_set.targets);
        let val_logits = network.logits(&val_set.concepts);
        let val_accuracy = label_accuracy(&val_logits, &val_set.targets);

        history.epochs.push(EpochStats {
            total_loss: post_parts.total,
            task_loss: post_parts.task,
            regularizer_value: post_parts.regularizer,
            train_accuracy,
            val_accuracy,
        });

        let improved = match &best {
            None => true,
            Some((best_acc, _, _)) => val_accuracy > *best_acc,
        };
        if improved {
            best = Some((val_accuracy, epoch, params));
        }
    }

    if let Some((_, epoch, snapshot)) = best {
        history.best_epoch = Some(epoch);
        if config.early_stopping {
            network.load_params(&snapshot);
        }
    }
    Ok((network, history))
}

/// Per-class sigmoid scores and the argmax label (lowest index on ties).
pub fn predict(network: &EntropyNetwork, concepts: &[f64]) -> (Vec<f64>, usize) {
    let r = network.class_count();
    let mut scores = Vec::with_capacity(r);
    for class in 0..r {
        scores.push(network.class_score(class, concepts));
    }
    let label = math::argmax(&scores);
    (scores, label)
}

/// Thresholded boolean output per class.
pub fn boolean_outputs(network: &EntropyNetwork, concepts: &[f64], epsilon: f64) -> Vec<bool> {
    (0..network.class_count())
        .map(|class| network.class_score(class, concepts) >= epsilon)
        .collect()
}

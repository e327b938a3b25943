//! The entropy-gated linear layer.
//!
//! One head serves one target class. The head scores every input concept by
//! the L1 norm of its outgoing weights, turns the scores into an attention
//! distribution through a temperature softmax, rescales the distribution so
//! its maximum is exactly 1, and multiplies the input concepts by the result.
//! The same machinery, thresholded, selects which concepts survive into the
//! empirical truth tables that rule extraction consumes.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, Matrix};

/// Per-class gated linear layer: weights, bias and softmax temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyHead {
    pub class_index: usize,
    /// `hidden_units x concepts` weight matrix.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub tau: f64,
}

impl EntropyHead {
    pub fn new(class_index: usize, weights: Matrix, bias: Vec<f64>, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidConfig(alloc::format!(
                "head temperature must be positive, got {tau}"
            )));
        }
        if weights.rows() != bias.len() {
            return Err(Error::LengthMismatch {
                what: "entropy head bias",
                left: weights.rows(),
                right: bias.len(),
            });
        }
        Ok(Self {
            class_index,
            weights,
            bias,
            tau,
        })
    }

    /// Number of input concepts this head reads.
    pub fn concepts(&self) -> usize {
        self.weights.cols()
    }

    pub fn hidden_units(&self) -> usize {
        self.weights.rows()
    }
}

/// Concept relevance scores derived from a head's weights.
///
/// `relevance[j]` is the L1 norm of the weight column for concept `j`;
/// `attention` is its temperature softmax (a probability distribution);
/// `gate` is `attention` divided by its maximum, so the strongest concept
/// gates at exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptScores {
    pub relevance: Vec<f64>,
    pub attention: Vec<f64>,
    pub gate: Vec<f64>,
}

impl ConceptScores {
    pub fn len(&self) -> usize {
        self.relevance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relevance.is_empty()
    }
}

/// Boolean concept-selection mask thresholded from the gate values.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptMask {
    pub kept: Vec<bool>,
    pub threshold: f64,
}

impl ConceptMask {
    /// Keep concept `j` iff `gate[j] >= threshold`.
    pub fn from_scores(scores: &ConceptScores, threshold: f64) -> Self {
        Self {
            kept: scores.gate.iter().map(|&g| g >= threshold).collect(),
            threshold,
        }
    }

    pub fn kept_count(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }

    /// Original indices of the kept concepts, in input order.
    pub fn kept_indices(&self) -> Vec<usize> {
        self.kept
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| if k { Some(i) } else { None })
            .collect()
    }
}

/// Computes relevance, attention and gate values for a head.
///
/// The softmax guarantees a strictly positive maximum, so the gate
/// normalization is always defined and its largest entry is exactly 1.
pub fn compute_scores(head: &EntropyHead) -> ConceptScores {
    let k = head.concepts();
    let mut relevance = Vec::with_capacity(k);
    for j in 0..k {
        relevance.push(math::l1_column_norm(&head.weights, j));
    }
    let attention = math::softmax_with_temperature(&relevance, head.tau)
        .expect("head temperature validated at construction");
    let max = attention[math::argmax(&attention)];
    let gate = attention.iter().map(|&a| a / max).collect();
    ConceptScores {
        relevance,
        attention,
        gate,
    }
}

/// Element-wise product of a concept tuple with the gate values.
///
/// Concepts must lie in `[0, 1]`; the offending index is reported otherwise.
pub fn gate_input(concepts: &[f64], scores: &ConceptScores) -> Result<Vec<f64>> {
    if concepts.len() != scores.len() {
        return Err(Error::LengthMismatch {
            what: "gate input",
            left: concepts.len(),
            right: scores.len(),
        });
    }
    for (j, &c) in concepts.iter().enumerate() {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::ConceptOutOfRange { concept: j, value: c });
        }
    }
    Ok(concepts
        .iter()
        .zip(scores.gate.iter())
        .map(|(c, g)| c * g)
        .collect())
}

/// Forward pass of one head: gate the input, then apply the affine map.
///
/// Scores are recomputed from the current weights so the gate always tracks
/// the parameters being trained.
pub fn head_forward(concepts: &[f64], head: &EntropyHead) -> Result<(Vec<f64>, ConceptScores)> {
    let scores = compute_scores(head);
    let gated = gate_input(concepts, &scores)?;
    let hidden = math::affine(&head.weights, &gated, &head.bias);
    Ok((hidden, scores))
}

/// Indicator `concepts[j] >= threshold` per entry (inclusive at the boundary).
pub fn binarize_concepts(concepts: &[f64], threshold: f64) -> Vec<bool> {
    concepts.iter().map(|&c| c >= threshold).collect()
}

/// Keeps the components of `bits` at positions where the mask holds,
/// preserving the original order. An all-false mask yields an empty tuple;
/// callers flag that condition when building formulas.
pub fn subselect(bits: &[bool], mask: &ConceptMask) -> Vec<bool> {
    assert!(
        bits.len() == mask.kept.len(),
        "subselect length mismatch: {} bits vs {} mask entries",
        bits.len(),
        mask.kept.len()
    );
    bits.iter()
        .zip(mask.kept.iter())
        .filter_map(|(&b, &k)| if k { Some(b) } else { None })
        .collect()
}

/// Empirical truth table for one class: masked binarized concept rows paired
/// with the thresholded network output for the same samples.
///
/// Rows may repeat and may contradict each other; nothing is deduplicated at
/// this stage.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTable {
    pub class_index: usize,
    /// Original dataset indices of the kept concepts, in input order.
    pub kept_concepts: Vec<usize>,
    /// One row per sample, `kept_concepts.len()` wide.
    pub rows: Vec<Vec<bool>>,
    /// Thresholded class output per sample.
    pub outputs: Vec<bool>,
    /// Names of the kept concepts.
    pub concept_names: Vec<String>,
}

impl TruthTable {
    pub fn width(&self) -> usize {
        self.kept_concepts.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// True when the mask dropped every concept; such tables cannot yield
    /// literals and the class is reported as unexplainable.
    pub fn has_empty_mask(&self) -> bool {
        self.kept_concepts.is_empty()
    }
}

/// Builds the truth table for one class over a batch of samples.
///
/// `class_score` must return the class membership score in `[0, 1]` for a
/// full (ungated) concept tuple; the same `threshold` binarizes both the
/// concepts and the score.
pub fn build_truth_table<F>(
    concepts: &Matrix,
    concept_names: &[String],
    class_index: usize,
    mask: &ConceptMask,
    threshold: f64,
    mut class_score: F,
) -> TruthTable
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(
        concepts.cols() == mask.kept.len(),
        "truth table concept count {} does not match mask width {}",
        concepts.cols(),
        mask.kept.len()
    );
    let kept_concepts = mask.kept_indices();
    let names = kept_concepts
        .iter()
        .map(|&j| concept_names[j].clone())
        .collect();

    let mut rows = Vec::with_capacity(concepts.rows());
    let mut outputs = Vec::with_capacity(concepts.rows());
    for s in 0..concepts.rows() {
        let sample = concepts.row(s);
        let bits = binarize_concepts(sample, threshold);
        rows.push(subselect(&bits, mask));
        outputs.push(class_score(sample) >= threshold);
    }

    TruthTable {
        class_index,
        kept_concepts,
        rows,
        outputs,
        concept_names: names,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::vec;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn head_with(weights: Matrix, tau: f64) -> EntropyHead {
        let bias = vec![0.0; weights.rows()];
        EntropyHead::new(0, weights, bias, tau).unwrap()
    }

    #[test]
    fn identical_columns_give_uniform_attention() {
        let w = Matrix::new(2, 3, vec![0.5, 0.5, 0.5, -0.25, -0.25, -0.25]).unwrap();
        let scores = compute_scores(&head_with(w, 0.7));
        for &a in &scores.attention {
            assert_close(a, 1.0 / 3.0, 1e-12);
        }
        for &g in &scores.gate {
            assert_close(g, 1.0, 1e-12);
        }
    }

    #[test]
    fn cold_temperature_concentrates_attention() {
        let w = Matrix::new(1, 2, vec![1.0, 0.0]).unwrap();
        let scores = compute_scores(&head_with(w, 1e-3));
        assert_close(scores.attention[0], 1.0, 1e-9);
        assert_close(scores.attention[1], 0.0, 1e-9);
        assert_close(scores.gate[0], 1.0, 0.0);
        assert_close(scores.gate[1], 0.0, 1e-9);
    }

    #[test]
    fn scores_match_scalar_evaluation() {
        // relevance (2, 1, 0) at tau = 1, evaluated with scalar exponentials.
        let w = Matrix::new(1, 3, vec![2.0, -1.0, 0.0]).unwrap();
        let scores = compute_scores(&head_with(w, 1.0));
        assert_close(scores.attention[0], 0.6652, 1e-3);
        assert_close(scores.attention[1], 0.2447, 1e-3);
        assert_close(scores.attention[2], 0.0900, 1e-3);
        assert_close(scores.gate[0], 1.0, 0.0);
        assert_close(scores.gate[1], 0.3679, 1e-3);
        assert_close(scores.gate[2], 0.1353, 1e-3);
    }

    #[test]
    fn gate_max_is_exactly_one() {
        let mut rng = rng::seeded(3);
        for _ in 0..20 {
            let w = rng::random_matrix(&mut rng, 4, 6, 2.0);
            let scores = compute_scores(&head_with(w, 0.5));
            let max = scores
                .gate
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, |a, b| if b > a { b } else { a });
            assert_eq!(max, 1.0);
            let sum: f64 = scores.attention.iter().sum();
            assert_close(sum, 1.0, 1e-12);
        }
    }

    #[test]
    fn gate_input_one_hot_keeps_single_concept() {
        let scores = ConceptScores {
            relevance: vec![1.0, 0.0, 0.0],
            attention: vec![0.98, 0.01, 0.01],
            gate: vec![1.0, 0.0, 0.0],
        };
        let out = gate_input(&[0.6, 0.9, 0.4], &scores).unwrap();
        assert_eq!(out, vec![0.6, 0.0, 0.0]);
    }

    #[test]
    fn gate_input_divide_by_max_then_product() {
        let scores = ConceptScores {
            relevance: vec![0.0, 0.0],
            attention: vec![0.8, 0.2],
            gate: vec![1.0, 0.25],
        };
        let out = gate_input(&[0.5, 0.5], &scores).unwrap();
        assert_eq!(out, vec![0.5, 0.125]);
    }

    #[test]
    fn gate_input_matches_hadamard_oracle() {
        let mut rng = rng::seeded(5);
        let gate: Vec<f64> = (0..8).map(|_| rng::uniform(&mut rng, 0.0, 1.0)).collect();
        let concepts: Vec<f64> = (0..8).map(|_| rng::uniform(&mut rng, 0.0, 1.0)).collect();
        let scores = ConceptScores {
            relevance: vec![0.0; 8],
            attention: vec![0.125; 8],
            gate: gate.clone(),
        };
        let out = gate_input(&concepts, &scores).unwrap();
        for j in 0..8 {
            assert_close(out[j], concepts[j] * gate[j], 1e-15);
        }
    }

    #[test]
    fn gate_input_rejects_out_of_range_concept() {
        let scores = ConceptScores {
            relevance: vec![0.0, 0.0],
            attention: vec![0.5, 0.5],
            gate: vec![1.0, 1.0],
        };
        let err = gate_input(&[0.5, 1.2], &scores).unwrap_err();
        assert_eq!(err, Error::ConceptOutOfRange { concept: 1, value: 1.2 });
    }

    #[test]
    fn head_forward_zero_input_returns_bias() {
        let w = Matrix::new(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.5, 0.25]).unwrap();
        let head = EntropyHead::new(0, w, vec![0.7, -0.3], 1.0).unwrap();
        let (h, _) = head_forward(&[0.0, 0.0, 0.0], &head).unwrap();
        assert_eq!(h, vec![0.7, -0.3]);
    }

    #[test]
    fn head_forward_identity_with_open_gate() {
        // Identical columns force an all-ones gate; identity weights with the
        // single nonzero per column keep columns identical only if we use a
        // matrix of equal columns, so use a 2x2 with equal column norms.
        let w = Matrix::identity(2);
        let head = EntropyHead::new(0, w, vec![0.0, 0.0], 1.0).unwrap();
        let (h, scores) = head_forward(&[0.3, 0.9], &head).unwrap();
        for &g in &scores.gate {
            assert_close(g, 1.0, 0.0);
        }
        assert_close(h[0], 0.3, 1e-15);
        assert_close(h[1], 0.9, 1e-15);
    }

    #[test]
    fn head_forward_matches_composed_oracles() {
        let mut rng = rng::seeded(9);
        let w = rng::random_matrix(&mut rng, 5, 4, 1.5);
        let bias: Vec<f64> = (0..5).map(|_| rng::uniform(&mut rng, -1.0, 1.0)).collect();
        let c: Vec<f64> = (0..4).map(|_| rng::uniform(&mut rng, 0.0, 1.0)).collect();
        let head = EntropyHead::new(1, w.clone(), bias.clone(), 0.8).unwrap();

        let (h, scores) = head_forward(&c, &head).unwrap();

        // Compose the two element-wise oracles by hand.
        let gated: Vec<f64> = c.iter().zip(scores.gate.iter()).map(|(a, b)| a * b).collect();
        for i in 0..5 {
            let mut acc = bias[i];
            for j in 0..4 {
                acc += w.get(i, j) * gated[j];
            }
            assert_close(h[i], acc, 1e-12);
        }
    }

    #[test]
    fn binarize_is_inclusive_at_threshold() {
        assert_eq!(binarize_concepts(&[0.1, 0.7], 0.5), vec![false, true]);
        assert_eq!(binarize_concepts(&[0.2, 0.9], 0.5), vec![false, true]);
        assert_eq!(binarize_concepts(&[0.5], 0.5), vec![true]);
    }

    #[test]
    fn subselect_examples() {
        let all = ConceptMask { kept: vec![true; 4], threshold: 0.5 };
        assert_eq!(
            subselect(&[true, false, true, true], &all),
            vec![true, false, true, true]
        );
        let mask = ConceptMask { kept: vec![true, false, false, true], threshold: 0.5 };
        assert_eq!(subselect(&[true, false, true, true], &mask), vec![true, true]);
    }

    #[test]
    fn subselect_matches_filter_oracle() {
        let mut rng = rng::seeded(13);
        for _ in 0..20 {
            let bits: Vec<bool> = (0..10).map(|_| rng::uniform(&mut rng, 0.0, 1.0) < 0.5).collect();
            let kept: Vec<bool> = (0..10).map(|_| rng::uniform(&mut rng, 0.0, 1.0) < 0.5).collect();
            let mask = ConceptMask { kept: kept.clone(), threshold: 0.5 };
            let mut expected = Vec::new();
            for i in 0..10 {
                if kept[i] {
                    expected.push(bits[i]);
                }
            }
            assert_eq!(subselect(&bits, &mask), expected);
        }
    }

    #[test]
    fn truth_table_single_sample() {
        let concepts = Matrix::new(1, 2, vec![0.9, 0.2]).unwrap();
        let names = vec![String::from("a"), String::from("b")];
        let mask = ConceptMask { kept: vec![true, true], threshold: 0.5 };
        let table = build_truth_table(&concepts, &names, 0, &mask, 0.5, |_| 0.9);
        assert_eq!(table.rows, vec![vec![true, false]]);
        assert_eq!(table.outputs, vec![true]);
        assert_eq!(table.concept_names, names);
    }

    #[test]
    fn truth_table_keeps_duplicate_rows() {
        let concepts = Matrix::new(2, 2, vec![0.9, 0.2, 0.9, 0.2]).unwrap();
        let names = vec![String::from("a"), String::from("b")];
        let mask = ConceptMask { kept: vec![true, true], threshold: 0.5 };
        let table = build_truth_table(&concepts, &names, 0, &mask, 0.5, |_| 0.1);
        assert_eq!(table.len(), 2);
        assert_eq!(table.rows[0], table.rows[1]);
    }

    #[test]
    fn truth_table_empty_mask_is_flagged() {
        let concepts = Matrix::new(1, 2, vec![0.9, 0.2]).unwrap();
        let names = vec![String::from("a"), String::from("b")];
        let mask = ConceptMask { kept: vec![false, false], threshold: 0.5 };
        let table = build_truth_table(&concepts, &names, 0, &mask, 0.5, |_| 0.9);
        assert!(table.has_empty_mask());
        assert_eq!(table.width(), 0);
        assert_eq!(table.rows[0].len(), 0);
    }

    #[test]
    fn permutation_equivariance_of_scores() {
        let mut rng = rng::seeded(17);
        let w = rng::random_matrix(&mut rng, 3, 5, 1.0);
        let scores = compute_scores(&head_with(w.clone(), 0.9));

        // Rotate columns left by 2 and recompute.
        let perm = [2usize, 3, 4, 0, 1];
        let mut pdata = Vec::new();
        for r in 0..3 {
            for &src in &perm {
                pdata.push(w.get(r, src));
            }
        }
        let pw = Matrix::new(3, 5, pdata).unwrap();
        let pscores = compute_scores(&head_with(pw, 0.9));
        for (dst, &src) in perm.iter().enumerate() {
            assert_close(pscores.relevance[dst], scores.relevance[src], 1e-12);
            assert_close(pscores.attention[dst], scores.attention[src], 1e-12);
            assert_close(pscores.gate[dst], scores.gate[src], 1e-12);
        }
    }

    #[test]
    fn weight_scaling_sharpens_attention() {
        let mut rng = rng::seeded(19);
        let w = rng::random_matrix(&mut rng, 3, 4, 1.0);
        let base = compute_scores(&head_with(w.clone(), 0.7));
        let t = 2.5;
        let scaled_data: Vec<f64> = w.data().iter().map(|&v| v * t).collect();
        let sw = Matrix::new(3, 4, scaled_data).unwrap();
        let scaled = compute_scores(&head_with(sw, 0.7));
        for j in 0..4 {
            assert_close(scaled.relevance[j], t * base.relevance[j], 1e-10);
        }
        let max_base = base.attention[crate::math::argmax(&base.attention)];
        let max_scaled = scaled.attention[crate::math::argmax(&scaled.attention)];
        assert!(max_scaled >= max_base - 1e-15);
    }
}

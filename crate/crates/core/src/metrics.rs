//! The quantitative evaluation measures: model accuracy, explanation
//! accuracy (mean per-class F1), complexity, fidelity, extraction time, and
//! cross-fold consistency, plus mean / standard-error aggregation helpers.
//!
//! All rate metrics are fractions in `[0, 1]`; reports render them as
//! percentages.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::ConceptDataset;
use crate::entropy::binarize_concepts;
use crate::error::{Error, Result};
use crate::fp;
use crate::logic::DnfFormula;
use crate::train::{label_accuracy, EntropyNetwork};

/// Binary F1 with the zero-denominator convention F1 = 0.
pub fn f1_score(predictions: &[bool], truth: &[bool]) -> f64 {
    assert!(
        predictions.len() == truth.len(),
        "f1 over {} predictions vs {} labels",
        predictions.len(),
        truth.len()
    );
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&p, &t) in predictions.iter().zip(truth.iter()) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Fraction of samples whose argmax prediction lands on a true target class.
pub fn model_accuracy(network: &EntropyNetwork, test: &ConceptDataset) -> Result<f64> {
    if test.samples() == 0 {
        return Err(Error::EmptyInput("model accuracy test set"));
    }
    let logits = network.logits(&test.concepts);
    Ok(label_accuracy(&logits, &test.targets))
}

/// Per-class F1 of each formula against class membership on binarized
/// concepts.
pub fn per_class_f1(
    formulas: &[DnfFormula],
    test: &ConceptDataset,
    epsilon: f64,
) -> Result<Vec<f64>> {
    if formulas.len() != test.class_count() {
        return Err(Error::LengthMismatch {
            what: "formulas vs classes",
            left: formulas.len(),
            right: test.class_count(),
        });
    }
    let binarized: Vec<Vec<bool>> = (0..test.samples())
        .map(|s| binarize_concepts(test.concepts.row(s), epsilon))
        .collect();
    let mut out = Vec::with_capacity(formulas.len());
    for (class, formula) in formulas.iter().enumerate() {
        let predictions: Vec<bool> = binarized.iter().map(|b| formula.evaluate(b)).collect();
        let truth: Vec<bool> = test.targets.iter().map(|t| t[class]).collect();
        out.push(f1_score(&predictions, &truth));
    }
    Ok(out)
}

/// Unweighted mean of the per-class F1 scores.
pub fn explanation_accuracy(
    formulas: &[DnfFormula],
    test: &ConceptDataset,
    epsilon: f64,
) -> Result<f64> {
    let scores = per_class_f1(formulas, test, epsilon)?;
    Ok(mean(&scores))
}

/// Literal-occurrence count of the standardized DNF; 0 for constants.
///
/// The minterm count is reported alongside in reports since both readings
/// of "terms" circulate; the literal count is the canonical complexity.
pub fn complexity(formula: &DnfFormula) -> usize {
    formula.literal_count()
}

pub fn minterm_count(formula: &DnfFormula) -> usize {
    formula.term_count()
}

/// Per-class agreement between each formula and the model's own thresholded
/// outputs on a held-out set.
pub fn per_class_fidelity(
    formulas: &[DnfFormula],
    network: &EntropyNetwork,
    held_out: &ConceptDataset,
    epsilon: f64,
) -> Result<Vec<f64>> {
    if formulas.len() != network.class_count() {
        return Err(Error::LengthMismatch {
            what: "formulas vs network classes",
            left: formulas.len(),
            right: network.class_count(),
        });
    }
    if held_out.samples() == 0 {
        return Err(Error::EmptyInput("fidelity held-out set"));
    }
    let binarized: Vec<Vec<bool>> = (0..held_out.samples())
        .map(|s| binarize_concepts(held_out.concepts.row(s), epsilon))
        .collect();
    let mut out = Vec::with_capacity(formulas.len());
    for (class, formula) in formulas.iter().enumerate() {
        let mut agree = 0usize;
        for s in 0..held_out.samples() {
            let model_bit = network.class_score(class, held_out.concepts.row(s)) >= epsilon;
            if formula.evaluate(&binarized[s]) == model_bit {
                agree += 1;
            }
        }
        out.push(agree as f64 / held_out.samples() as f64);
    }
    Ok(out)
}

/// Mean per-class fidelity.
pub fn fidelity(
    formulas: &[DnfFormula],
    network: &EntropyNetwork,
    held_out: &ConceptDataset,
    epsilon: f64,
) -> Result<f64> {
    Ok(mean(&per_class_fidelity(formulas, network, held_out, epsilon)?))
}

/// Wall-clock cost of producing an explanation from scratch: training plus
/// per-class extraction, reported separately and summed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunTiming {
    pub train_seconds: f64,
    pub extract_seconds: f64,
}

impl RunTiming {
    pub fn total_seconds(&self) -> f64 {
        self.train_seconds + self.extract_seconds
    }
}

/// Cross-fold stability of the concept sets used by each class's formula.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    /// Per-class mean concept frequency across folds, in `[0, 1]`.
    pub per_class: Vec<f64>,
    /// Mean over classes, in `[0, 1]`.
    pub mean: f64,
    /// Classes whose formulas mentioned no concept in any fold; they
    /// contribute zero and deserve a diagnostic.
    pub empty_classes: Vec<usize>,
}

/// For every concept appearing in any fold's formula for a class, its
/// frequency is (folds containing it) / folds; the class consistency is the
/// mean frequency and the report mean averages the classes.
pub fn consistency(per_fold_class_concepts: &[Vec<BTreeSet<String>>]) -> Result<ConsistencyReport> {
    let folds = per_fold_class_concepts.len();
    if folds < 2 {
        return Err(Error::InvalidConfig(alloc::format!(
            "consistency needs at least 2 folds, got {folds}"
        )));
    }
    let classes = per_fold_class_concepts[0].len();
    for (f, fold) in per_fold_class_concepts.iter().enumerate() {
        if fold.len() != classes {
            return Err(Error::LengthMismatch {
                what: "classes per fold",
                left: fold.len(),
                right: classes,
            });
        }
        let _ = f;
    }

    let mut per_class = Vec::with_capacity(classes);
    let mut empty_classes = Vec::new();
    for class in 0..classes {
        let mut union: BTreeSet<&String> = BTreeSet::new();
        for fold in per_fold_class_concepts {
            union.extend(fold[class].iter());
        }
        if union.is_empty() {
            per_class.push(0.0);
            empty_classes.push(class);
            continue;
        }
        let mut acc = 0.0;
        for name in &union {
            let count = per_fold_class_concepts
                .iter()
                .filter(|fold| fold[class].contains(*name))
                .count();
            acc += count as f64 / folds as f64;
        }
        per_class.push(acc / union.len() as f64);
    }
    Ok(ConsistencyReport {
        mean: mean(&per_class),
        per_class,
        empty_classes,
    })
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation over the square root of the count; zero for
/// fewer than two values.
pub fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
    fp::sqrt(var) / fp::sqrt(n as f64)
}

/// Everything reported per class after extraction and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassExplanationResult {
    pub class_index: usize,
    pub class_name: String,
    pub formula: DnfFormula,
    pub f1_on_test: f64,
    pub complexity_literals: usize,
    pub complexity_minterms: usize,
    pub fidelity: f64,
}

/// Evaluates formulas per class on a test split: F1, complexity, fidelity.
pub fn evaluate_explanations(
    formulas: &[DnfFormula],
    network: &EntropyNetwork,
    test: &ConceptDataset,
    epsilon: f64,
) -> Result<Vec<ClassExplanationResult>> {
    let f1s = per_class_f1(formulas, test, epsilon)?;
    let fidelities = per_class_fidelity(formulas, network, test, epsilon)?;
    Ok(formulas
        .iter()
        .enumerate()
        .map(|(class, formula)| ClassExplanationResult {
            class_index: class,
            class_name: test.class_names[class].clone(),
            formula: formula.clone(),
            f1_on_test: f1s[class],
            complexity_literals: complexity(formula),
            complexity_minterms: minterm_count(formula),
            fidelity: fidelities[class],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Literal, Minterm};
    use alloc::string::ToString;
    use alloc::vec;

    fn lit(idx: usize, name: &str, negated: bool) -> Literal {
        Literal::new(idx, name.to_string(), negated)
    }

    #[test]
    fn f1_matches_hand_counted_confusion_fixture() {
        // 20 samples; tally by hand:
        //   indices 0-5   pred T truth T  -> TP = 6
        //   indices 6-8   pred T truth F  -> FP = 3
        //   indices 9-12  pred F truth T  -> FN = 4
        //   indices 13-19 pred F truth F  -> TN = 7
        // F1 = 2*6 / (2*6 + 3 + 4) = 12/19.
        let mut pred = vec![false; 20];
        let mut truth = vec![false; 20];
        for i in 0..6 {
            pred[i] = true;
            truth[i] = true;
        }
        for i in 6..9 {
            pred[i] = true;
        }
        for i in 9..13 {
            truth[i] = true;
        }
        let f1 = f1_score(&pred, &truth);
        assert!((f1 - 12.0 / 19.0).abs() < 1e-15);
    }

    #[test]
    fn f1_zero_denominator_is_zero() {
        assert_eq!(f1_score(&[false, false], &[false, false]), 0.0);
    }

    #[test]
    fn complexity_counts_literal_occurrences() {
        let nose = DnfFormula::from_terms(
            0,
            vec![Minterm::new(vec![lit(0, "nose", false)]).unwrap()],
        );
        assert_eq!(complexity(&nose), 1);

        let xor = DnfFormula::from_terms(
            0,
            vec![
                Minterm::new(vec![lit(0, "a", true), lit(1, "b", false)]).unwrap(),
                Minterm::new(vec![lit(0, "a", false), lit(1, "b", true)]).unwrap(),
            ],
        );
        assert_eq!(complexity(&xor), 4);
        assert_eq!(minterm_count(&xor), 2);
        assert_eq!(complexity(&DnfFormula::true_formula(0)), 0);
        assert_eq!(complexity(&DnfFormula::false_formula(0)), 0);
    }

    #[test]
    fn complexity_never_grows_under_simplification() {
        let mut rng = crate::rng::seeded(91);
        for _ in 0..100 {
            let m = 1 + rand::Rng::gen_range(&mut rng, 0..5usize);
            let names: Vec<String> = (0..m).map(|i| alloc::format!("n{i}")).collect();
            let mut terms = Vec::new();
            for pattern in 0..(1usize << m) {
                if rand::Rng::gen_range(&mut rng, 0..100u32) < 40 {
                    let lits: Vec<Literal> = (0..m)
                        .map(|j| lit(j, &names[j], pattern >> j & 1 == 0))
                        .collect();
                    terms.push(Minterm::new(lits).unwrap());
                }
            }
            let f = DnfFormula::from_terms(0, terms);
            let out = crate::logic::simplify(&f, 16);
            assert!(complexity(&out.formula) <= complexity(&f));
        }
    }

    #[test]
    fn complexity_ignores_term_and_literal_order() {
        let a = DnfFormula::from_terms(
            0,
            vec![
                Minterm::new(vec![lit(0, "a", true), lit(1, "b", false)]).unwrap(),
                Minterm::new(vec![lit(2, "c", false)]).unwrap(),
            ],
        );
        let b = DnfFormula::from_terms(
            0,
            vec![
                Minterm::new(vec![lit(2, "c", false)]).unwrap(),
                Minterm::new(vec![lit(1, "b", false), lit(0, "a", true)]).unwrap(),
            ],
        );
        assert_eq!(complexity(&a), complexity(&b));
    }

    #[test]
    fn consistency_hand_computed_example() {
        // Two folds with sets {a, b} and {b, c}: frequencies a = 0.5,
        // b = 1.0, c = 0.5, mean = 2/3.
        let fold1 = vec![BTreeSet::from(["a".to_string(), "b".to_string()])];
        let fold2 = vec![BTreeSet::from(["b".to_string(), "c".to_string()])];
        let report = consistency(&[fold1, fold2]).unwrap();
        assert!((report.mean - 2.0 / 3.0).abs() < 1e-15);
        assert!(report.empty_classes.is_empty());
    }

    #[test]
    fn consistency_identical_sets_is_full() {
        let fold: Vec<BTreeSet<String>> =
            vec![BTreeSet::from(["a".to_string(), "b".to_string()])];
        let report = consistency(&vec![fold.clone(); 5]).unwrap();
        assert_eq!(report.mean, 1.0);
    }

    #[test]
    fn consistency_flags_all_empty_classes() {
        let fold: Vec<BTreeSet<String>> = vec![BTreeSet::new(), BTreeSet::from(["a".to_string()])];
        let report = consistency(&vec![fold.clone(); 3]).unwrap();
        assert_eq!(report.per_class[0], 0.0);
        assert_eq!(report.empty_classes, vec![0]);
    }

    #[test]
    fn consistency_needs_two_folds() {
        let fold: Vec<BTreeSet<String>> = vec![BTreeSet::new()];
        assert!(consistency(&[fold]).is_err());
    }

    #[test]
    fn timing_is_additive() {
        let t = RunTiming {
            train_seconds: 12.25,
            extract_seconds: 0.75,
        };
        assert!((t.total_seconds() - 13.0).abs() < 1e-9);
    }

    #[test]
    fn sem_of_constant_samples_is_zero() {
        assert_eq!(standard_error(&[0.5, 0.5, 0.5]), 0.0);
        assert_eq!(standard_error(&[0.7]), 0.0);
        let sem = standard_error(&[1.0, 2.0, 3.0, 4.0]);
        // stddev of 1..4 is sqrt(5/3); sem = sqrt(5/3)/2.
        let expected = (5.0f64 / 3.0).sqrt() / 2.0;
        assert!((sem - expected).abs() < 1e-12);
    }
}

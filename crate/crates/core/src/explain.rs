//! Per-class extraction pipeline: gate mask from the trained head, truth
//! table over the extraction split, greedy aggregation against the
//! validation split, then minimization.

use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::ConceptDataset;
use crate::entropy::{binarize_concepts, build_truth_table, compute_scores, ConceptMask};
use crate::error::{Error, Result};
use crate::logic::{aggregate_class_formula, simplify, DnfFormula};
use crate::train::EntropyNetwork;

/// Extraction outcome and diagnostics for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassExplanation {
    pub class_index: usize,
    pub class_name: String,
    pub formula: DnfFormula,
    /// Original indices of the concepts the gate mask kept.
    pub kept_concepts: Vec<usize>,
    /// The mask dropped every concept; the formula is `False`.
    pub empty_mask: bool,
    /// The mask dropped nothing (kept count equals the concept count);
    /// legal, but worth surfacing.
    pub mask_kept_all: bool,
    /// Distinct boolean patterns seen with both output values.
    pub contradictory_patterns: usize,
    /// Minimization skipped because the kept-variable count exceeded the
    /// configured limit.
    pub minimization_skipped: bool,
}

/// Extracts and minimizes the formula for one class.
///
/// The truth table is built over `extraction`; the greedy aggregation stop
/// rule is judged on `validation`. Classes without a single positive output
/// come back as the constant `False`.
pub fn explain_class(
    network: &EntropyNetwork,
    extraction: &ConceptDataset,
    validation: &ConceptDataset,
    class: usize,
    epsilon: f64,
    qm_var_limit: usize,
) -> Result<ClassExplanation> {
    if class >= network.class_count() {
        return Err(Error::UnknownClass(alloc::format!("index {class}")));
    }
    if extraction.concept_count() != network.concept_count() {
        return Err(Error::LengthMismatch {
            what: "extraction concepts vs network",
            left: extraction.concept_count(),
            right: network.concept_count(),
        });
    }
    let class_name = extraction.class_names[class].clone();

    let scores = compute_scores(&network.heads()[class].head);
    let mask = ConceptMask::from_scores(&scores, epsilon);
    let kept_concepts = mask.kept_indices();
    if kept_concepts.is_empty() {
        return Ok(ClassExplanation {
            class_index: class,
            class_name,
            formula: DnfFormula::false_formula(class),
            kept_concepts,
            empty_mask: true,
            mask_kept_all: false,
            contradictory_patterns: 0,
            minimization_skipped: false,
        });
    }
    let mask_kept_all = kept_concepts.len() == network.concept_count();

    let table = build_truth_table(
        &extraction.concepts,
        &extraction.concept_names,
        class,
        &mask,
        epsilon,
        |sample| network.class_score(class, sample),
    );

    let val_samples: Vec<Vec<bool>> = (0..validation.samples())
        .map(|s| binarize_concepts(validation.concepts.row(s), epsilon))
        .collect();
    let val_truth: Vec<bool> = validation.targets.iter().map(|t| t[class]).collect();

    let (aggregated, stats) = aggregate_class_formula(&table, &val_samples, &val_truth)?;
    let outcome = simplify(&aggregated, qm_var_limit);

    Ok(ClassExplanation {
        class_index: class,
        class_name,
        formula: outcome.formula,
        kept_concepts,
        empty_mask: false,
        mask_kept_all,
        contradictory_patterns: stats.contradictory_patterns,
        minimization_skipped: outcome.skipped,
    })
}

/// Runs [`explain_class`] for every class.
pub fn explain_all(
    network: &EntropyNetwork,
    extraction: &ConceptDataset,
    validation: &ConceptDataset,
    epsilon: f64,
    qm_var_limit: usize,
) -> Result<Vec<ClassExplanation>> {
    (0..network.class_count())
        .map(|class| explain_class(network, extraction, validation, class, epsilon, qm_var_limit))
        .collect()
}

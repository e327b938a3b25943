//! Class-level formula assembly: deduplicate positive truth-table rows into
//! support-ranked minterms, then OR them in greedily while the explanation's
//! validation F1 for the class strictly improves.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{extract_minterm, DnfFormula, Minterm};
use crate::entropy::TruthTable;
use crate::error::{Error, Result};
use crate::metrics::f1_score;

/// Extraction diagnostics for one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AggregationStats {
    /// Distinct boolean patterns that occurred with both output values.
    /// The positive occurrences still yield a minterm; contradictions
    /// degrade measured accuracy rather than erroring.
    pub contradictory_patterns: usize,
    /// Distinct positive patterns available for aggregation.
    pub candidate_count: usize,
    /// Candidates accepted before the first non-improving one.
    pub accepted_count: usize,
}

/// Greedy support-ranked aggregation.
///
/// `val_samples` are full-width binarized concept tuples from the validation
/// split and `val_truth` the class membership of each. Candidates are sorted
/// by support descending (ties: lexicographic sign pattern) and accepted
/// while the class F1 over the validation split strictly improves; the first
/// non-improving candidate stops the scan. No positive rows yields the
/// constant `False`.
pub fn aggregate_class_formula(
    table: &TruthTable,
    val_samples: &[Vec<bool>],
    val_truth: &[bool],
) -> Result<(DnfFormula, AggregationStats)> {
    if val_samples.len() != val_truth.len() {
        return Err(Error::LengthMismatch {
            what: "validation samples vs labels",
            left: val_samples.len(),
            right: val_truth.len(),
        });
    }
    if table.has_empty_mask() && table.outputs.iter().any(|&o| o) {
        return Err(Error::NoConceptsRetained);
    }
    let mut stats = AggregationStats::default();

    // Pattern -> (positive rows, negative rows).
    let mut patterns: BTreeMap<&[bool], (usize, usize)> = BTreeMap::new();
    for (row, &out) in table.rows.iter().zip(table.outputs.iter()) {
        let entry = patterns.entry(row.as_slice()).or_insert((0, 0));
        if out {
            entry.0 += 1;
        } else {
            entry.1 += 1;
        }
    }

    let mut candidates: Vec<Minterm> = Vec::new();
    for (row, (pos, neg)) in &patterns {
        if *pos > 0 {
            if *neg > 0 {
                stats.contradictory_patterns += 1;
            }
            let term = extract_minterm(row, &table.kept_concepts, &table.concept_names)?
                .with_support(*pos);
            candidates.push(term);
        }
    }
    stats.candidate_count = candidates.len();

    candidates.sort_by(|a, b| {
        b.support
            .cmp(&a.support)
            .then_with(|| a.signature().cmp(&b.signature()))
    });

    let mut accepted: Vec<Minterm> = Vec::new();
    let mut best_f1 = 0.0f64; // the empty (False) explanation scores zero
    for candidate in candidates {
        let mut trial = accepted.clone();
        trial.push(candidate);
        let predictions: Vec<bool> = val_samples
            .iter()
            .map(|sample| trial.iter().any(|t| t.matches(sample)))
            .collect();
        let f1 = f1_score(&predictions, val_truth);
        if f1 > best_f1 {
            best_f1 = f1;
            accepted = trial;
        } else {
            break;
        }
    }
    stats.accepted_count = accepted.len();

    Ok((
        DnfFormula::from_terms(table.class_index, accepted),
        stats,
    ))
}

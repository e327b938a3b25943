//! Formula data model and the rule-extraction pipeline: minterms from
//! truth-table rows, support-ranked greedy aggregation into class-level DNF,
//! Quine–McCluskey minimization, and formula evaluation.

mod aggregate;
mod parse;
mod qm;

pub use aggregate::{aggregate_class_formula, AggregationStats};
pub use parse::parse;
pub use qm::{simplify, SimplifyOutcome};

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A possibly negated named concept.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Literal {
    /// Index of the concept in the originating dataset.
    pub concept_index: usize,
    pub concept_name: String,
    pub negated: bool,
}

impl Literal {
    pub fn new(concept_index: usize, concept_name: String, negated: bool) -> Self {
        Self {
            concept_index,
            concept_name,
            negated,
        }
    }

    /// Whether the literal holds on a full-width boolean sample.
    #[inline]
    pub fn holds(&self, sample: &[bool]) -> bool {
        assert!(
            self.concept_index < sample.len(),
            "literal references concept {} but the sample has width {}",
            self.concept_index,
            sample.len()
        );
        sample[self.concept_index] != self.negated
    }
}

/// Conjunction of literals over distinct concepts.
///
/// `support` counts the truth-table rows the term was distilled from; it is
/// extraction metadata and takes no part in term identity or comparison.
#[derive(Debug, Clone, Eq)]
pub struct Minterm {
    literals: Vec<Literal>,
    pub support: usize,
}

impl PartialEq for Minterm {
    fn eq(&self, other: &Self) -> bool {
        self.literals == other.literals
    }
}

impl Minterm {
    /// Sorts literals by concept index; a concept may appear only once.
    pub fn new(literals: Vec<Literal>) -> Result<Self> {
        let mut literals = literals;
        literals.sort();
        for pair in literals.windows(2) {
            if pair[0].concept_index == pair[1].concept_index {
                return Err(Error::Parse(alloc::format!(
                    "concept '{}' appears twice in one term",
                    pair[0].concept_name
                )));
            }
        }
        if literals.is_empty() {
            return Err(Error::NoConceptsRetained);
        }
        Ok(Self {
            literals,
            support: 1,
        })
    }

    pub fn with_support(mut self, support: usize) -> Self {
        self.support = support;
        self
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    /// All literals satisfied on the sample.
    pub fn matches(&self, sample: &[bool]) -> bool {
        self.literals.iter().all(|l| l.holds(sample))
    }

    /// Sign pattern keyed by concept index; the deterministic ordering and
    /// identity key for terms.
    pub fn signature(&self) -> Vec<(usize, bool)> {
        self.literals
            .iter()
            .map(|l| (l.concept_index, !l.negated))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Body {
    Constant(bool),
    Terms(Vec<Minterm>),
}

/// Disjunction of minterms for one class, with `True`/`False` constants for
/// degenerate cases.
#[derive(Debug, Clone, PartialEq)]
pub struct DnfFormula {
    pub class_index: usize,
    body: Body,
}

impl DnfFormula {
    pub fn constant(class_index: usize, value: bool) -> Self {
        Self {
            class_index,
            body: Body::Constant(value),
        }
    }

    pub fn false_formula(class_index: usize) -> Self {
        Self::constant(class_index, false)
    }

    pub fn true_formula(class_index: usize) -> Self {
        Self::constant(class_index, true)
    }

    /// Builds a DNF from terms, dropping syntactic duplicates (first
    /// occurrence wins). No terms means the constant `False`.
    pub fn from_terms(class_index: usize, terms: Vec<Minterm>) -> Self {
        let mut unique: Vec<Minterm> = Vec::with_capacity(terms.len());
        for term in terms {
            if !unique.contains(&term) {
                unique.push(term);
            }
        }
        if unique.is_empty() {
            Self::false_formula(class_index)
        } else {
            Self {
                class_index,
                body: Body::Terms(unique),
            }
        }
    }

    pub fn is_false(&self) -> bool {
        self.body == Body::Constant(false)
    }

    pub fn is_true(&self) -> bool {
        self.body == Body::Constant(true)
    }

    pub fn as_constant(&self) -> Option<bool> {
        match self.body {
            Body::Constant(v) => Some(v),
            Body::Terms(_) => None,
        }
    }

    /// Terms of the disjunction; empty for the constants.
    pub fn terms(&self) -> &[Minterm] {
        match &self.body {
            Body::Constant(_) => &[],
            Body::Terms(terms) => terms,
        }
    }

    /// True iff any term is fully satisfied; `False` evaluates false
    /// everywhere and `True` everywhere true.
    pub fn evaluate(&self, sample: &[bool]) -> bool {
        match &self.body {
            Body::Constant(v) => *v,
            Body::Terms(terms) => terms.iter().any(|t| t.matches(sample)),
        }
    }

    /// Total count of literal occurrences; 0 for the constants.
    pub fn literal_count(&self) -> usize {
        self.terms().iter().map(|t| t.literals.len()).sum()
    }

    pub fn term_count(&self) -> usize {
        self.terms().len()
    }

    /// Names of the concepts mentioned anywhere in the formula.
    pub fn concept_names(&self) -> BTreeSet<String> {
        self.terms()
            .iter()
            .flat_map(|t| t.literals.iter().map(|l| l.concept_name.clone()))
            .collect()
    }

    /// Largest concept index mentioned, if any; samples passed to
    /// [`evaluate`](Self::evaluate) must be wider than this.
    pub fn max_concept_index(&self) -> Option<usize> {
        self.terms()
            .iter()
            .flat_map(|t| t.literals.iter().map(|l| l.concept_index))
            .max()
    }
}

/// Builds the example-level conjunction for one positive truth-table row:
/// concept `j` appears positive iff `row[j]` is true, negated otherwise.
pub fn extract_minterm(
    row: &[bool],
    kept_concepts: &[usize],
    concept_names: &[String],
) -> Result<Minterm> {
    if row.is_empty() {
        return Err(Error::NoConceptsRetained);
    }
    assert!(
        row.len() == kept_concepts.len() && row.len() == concept_names.len(),
        "minterm row width {} vs {} kept concepts / {} names",
        row.len(),
        kept_concepts.len(),
        concept_names.len()
    );
    let literals = row
        .iter()
        .enumerate()
        .map(|(p, &bit)| Literal::new(kept_concepts[p], concept_names[p].clone(), !bit))
        .collect();
    Minterm::new(literals)
}

/// Output notation for [`render`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderStyle {
    /// `¬`, `∧`, `∨`.
    Unicode,
    /// `~`, `&`, `|` — the grammar accepted by [`parse`].
    Ascii,
    /// Ascii symbols, every term parenthesized, terms sorted by their sign
    /// pattern; a normalized form for comparisons.
    DnfCanonical,
}

/// Deterministic textual form. Literals print in original concept order;
/// terms with more than one literal are parenthesized (canonical style
/// parenthesizes every term).
pub fn render(formula: &DnfFormula, style: RenderStyle) -> String {
    use core::fmt::Write;

    if let Some(value) = formula.as_constant() {
        return String::from(if value { "True" } else { "False" });
    }
    let (not, and, or) = match style {
        RenderStyle::Unicode => ("¬", " ∧ ", " ∨ "),
        RenderStyle::Ascii | RenderStyle::DnfCanonical => ("~", " & ", " | "),
    };

    let mut terms: Vec<&Minterm> = formula.terms().iter().collect();
    if style == RenderStyle::DnfCanonical {
        terms.sort_by_key(|t| t.signature());
    }

    let mut out = String::new();
    for (ti, term) in terms.iter().enumerate() {
        if ti > 0 {
            out.push_str(or);
        }
        let wrap = style == RenderStyle::DnfCanonical || term.literals.len() > 1;
        if wrap {
            out.push('(');
        }
        for (li, lit) in term.literals.iter().enumerate() {
            if li > 0 {
                out.push_str(and);
            }
            if lit.negated {
                out.push_str(not);
            }
            let _ = write!(out, "{}", lit.concept_name);
        }
        if wrap {
            out.push(')');
        }
    }
    out
}

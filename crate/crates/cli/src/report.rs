//! Experiment report: one JSON document per run with stable keys, plus a
//! Markdown rendering of the aggregate table.
//!
//! Rate metrics are stored as fractions in `[0, 1]` and rendered as
//! percentages; complexity is stored both as literal occurrences (the
//! canonical reading) and as minterm counts.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config_echo: ExperimentConfig,
    pub folds: Vec<FoldReport>,
    pub aggregate: Aggregate,
    /// Cross-fold concept-set stability, fraction in [0, 1].
    pub consistency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    /// Training seed derived for this fold from the experiment seed.
    pub seed: u64,
    pub model_accuracy: f64,
    pub explanation_accuracy: f64,
    pub per_class: Vec<PerClassReport>,
    pub time_train_s: f64,
    pub time_extract_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerClassReport {
    pub name: String,
    /// Ascii-grammar rendering, parseable by the formula parser.
    pub formula: String,
    pub f1: f64,
    pub complexity_literals: usize,
    pub complexity_minterms: usize,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub model_accuracy_mean: f64,
    pub model_accuracy_sem: f64,
    pub explanation_accuracy_mean: f64,
    pub explanation_accuracy_sem: f64,
    pub fidelity_mean: f64,
    pub fidelity_sem: f64,
    pub complexity_literals_mean: f64,
    pub complexity_literals_sem: f64,
    pub complexity_minterms_mean: f64,
    pub complexity_minterms_sem: f64,
    pub time_train_s_mean: f64,
    pub time_train_s_sem: f64,
    pub time_extract_s_mean: f64,
    pub time_extract_s_sem: f64,
    pub time_total_s_mean: f64,
    pub time_total_s_sem: f64,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("parsing report JSON")
    }

    /// Aggregate table plus per-class formulas, as Markdown.
    pub fn markdown_summary(&self) -> String {
        let pct = |v: f64| format!("{:.2}", v * 100.0);
        let a = &self.aggregate;
        let mut out = String::new();
        out.push_str("# Cross-validation summary\n\n");
        out.push_str(&format!(
            "{} folds over `{}` (seed {}).\n\n",
            self.folds.len(),
            self.config_echo.dataset.kind,
            self.config_echo.train.seed
        ));
        out.push_str("| metric | mean ± sem |\n|---|---|\n");
        out.push_str(&format!(
            "| model accuracy (%) | {} ± {} |\n",
            pct(a.model_accuracy_mean),
            pct(a.model_accuracy_sem)
        ));
        out.push_str(&format!(
            "| explanation accuracy (%) | {} ± {} |\n",
            pct(a.explanation_accuracy_mean),
            pct(a.explanation_accuracy_sem)
        ));
        out.push_str(&format!(
            "| fidelity (%) | {} ± {} |\n",
            pct(a.fidelity_mean),
            pct(a.fidelity_sem)
        ));
        out.push_str(&format!(
            "| complexity (literals) | {:.2} ± {:.2} |\n",
            a.complexity_literals_mean, a.complexity_literals_sem
        ));
        out.push_str(&format!(
            "| complexity (minterms) | {:.2} ± {:.2} |\n",
            a.complexity_minterms_mean, a.complexity_minterms_sem
        ));
        out.push_str(&format!(
            "| extraction time (s) | {:.3} ± {:.3} |\n",
            a.time_total_s_mean, a.time_total_s_sem
        ));
        out.push_str(&format!(
            "| consistency (%) | {} |\n",
            pct(self.consistency)
        ));
        out.push_str("\n## Formulas per fold\n\n");
        for fold in &self.folds {
            out.push_str(&format!("### fold {}\n\n", fold.fold));
            for class in &fold.per_class {
                out.push_str(&format!(
                    "- `{}`: `{}` (F1 {}%, fidelity {}%)\n",
                    class.name,
                    class.formula,
                    pct(class.f1),
                    pct(class.fidelity)
                ));
            }
            out.push('\n');
        }
        out
    }
}

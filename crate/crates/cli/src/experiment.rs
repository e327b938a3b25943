//! The cross-validation driver: stratified folds, per-fold training and
//! extraction with wall-clock instrumentation, metric aggregation across
//! folds, and the hyperparameter grid sweep.
//!
//! Every random stream derives from the single experiment seed
//! (`train.seed`) through fixed stream tags, so a seed pins the folds, the
//! validation splits, the synthetic data and every initialization. Folds
//! may run on several threads (capped by `ENTROPY_LENS_THREADS`); results
//! join in fold order, so parallelism never changes the report.

use std::collections::BTreeSet;
use std::time::Instant;

use anyhow::{anyhow, bail, Result};
use entropy_lens_core::dataset::{assign_folds, split_validation, synth_parity, synth_toy, ConceptDataset};
use entropy_lens_core::explain::{explain_all, ClassExplanation};
use entropy_lens_core::logic::{render, DnfFormula, RenderStyle};
use entropy_lens_core::metrics;
use entropy_lens_core::train::{train, EntropyNetwork, TrainConfig};

use crate::config::ExperimentConfig;
use crate::csvio;
use crate::report::{Aggregate, FoldReport, PerClassReport, Report};

// Stream tags for seed derivation; arbitrary but fixed forever.
const STREAM_DATA: u64 = 0x01;
const STREAM_FOLDS: u64 = 0x02;
const STREAM_TRAIN: u64 = 0x1000;
const STREAM_VAL: u64 = 0x2000;

/// splitmix64 finalizer over `base + tag`; the one seed-derivation rule.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs a closure under wall-clock instrumentation, returning its result
/// and the elapsed seconds. All reported phase timings go through here.
pub fn timed<T>(work: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let result = work();
    (result, start.elapsed().as_secs_f64())
}

/// Materializes the configured dataset; synthetic generators draw their
/// seed from the experiment seed.
pub fn build_dataset(config: &ExperimentConfig) -> Result<ConceptDataset> {
    let section = &config.dataset;
    match section.kind.as_str() {
        "toy" => Ok(synth_toy(section.pad)),
        "parity" => synth_parity(
            section.n,
            section.noise,
            derive_seed(config.train.seed, STREAM_DATA),
        )
        .map_err(|e| anyhow!("{e}")),
        "csv" => {
            let path = section.path.as_ref().expect("validated");
            csvio::read_dataset(path, &section.targets, &section.discretize)
        }
        other => bail!("unknown dataset kind '{other}'"),
    }
}

/// One fold's full output.
pub struct FoldOutcome {
    pub report: FoldReport,
    pub explanations: Vec<ClassExplanation>,
    pub warnings: Vec<String>,
}

/// Crossval output: the report plus per-fold formulas for the text files.
pub struct CrossvalOutcome {
    pub report: Report,
    pub fold_formulas: Vec<Vec<(String, DnfFormula)>>,
    pub warnings: Vec<String>,
}

fn thread_cap() -> usize {
    match std::env::var("ENTROPY_LENS_THREADS") {
        Ok(v) => v.parse::<usize>().unwrap_or(1).max(1),
        Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    }
}

/// Runs one fold end to end: split, train, extract, evaluate.
fn run_fold(
    config: &ExperimentConfig,
    dataset: &ConceptDataset,
    fold_index: usize,
    test_indices: &[usize],
    base_train: &TrainConfig,
) -> Result<FoldOutcome> {
    let mut warnings = Vec::new();
    let seed = config.train.seed;
    let r = dataset.class_count();

    let in_test: BTreeSet<usize> = test_indices.iter().copied().collect();
    let train_indices: Vec<usize> =
        (0..dataset.samples()).filter(|i| !in_test.contains(i)).collect();

    // 20% of the training portion becomes the validation slice guiding
    // early stopping and greedy aggregation. Tiny folds fall back to
    // validating on the fit data itself, mirroring the toy protocol.
    let (fit_idx, val_idx) = split_validation(
        dataset,
        &train_indices,
        5,
        derive_seed(seed, STREAM_VAL + fold_index as u64),
    );
    let (fit_idx, val_idx) = if val_idx.len() < 2.max(r) {
        warnings.push(format!(
            "fold {fold_index}: validation slice would hold {} samples; validating on the training portion",
            val_idx.len()
        ));
        (train_indices.clone(), train_indices.clone())
    } else {
        (fit_idx, val_idx)
    };

    let fit_set = dataset.subset(&fit_idx).map_err(|e| anyhow!("{e}"))?;
    let val_set = dataset.subset(&val_idx).map_err(|e| anyhow!("{e}"))?;
    let test_set = dataset.subset(test_indices).map_err(|e| anyhow!("{e}"))?;

    for class in 0..r {
        if !fit_idx.iter().any(|&i| dataset.targets[i][class]) {
            warnings.push(format!(
                "fold {fold_index}: class '{}' absent from the training split; its formula will be False",
                dataset.class_names[class]
            ));
        }
    }

    let fold_seed = derive_seed(seed, STREAM_TRAIN + fold_index as u64);
    let mut train_config = base_train.clone();
    train_config.seed = fold_seed;

    let (trained, time_train_s) = timed(|| -> Result<EntropyNetwork> {
        let network = EntropyNetwork::new(dataset.concept_count(), r, &train_config)
            .map_err(|e| anyhow!("{e}"))?;
        let (network, _history) =
            train(network, &fit_set, &val_set, &train_config).map_err(|e| anyhow!("{e}"))?;
        Ok(network)
    });
    let network = trained?;

    let (extracted, time_extract_s) = timed(|| {
        explain_all(
            &network,
            &fit_set,
            &val_set,
            train_config.epsilon,
            config.extract.qm_var_limit,
        )
    });
    let explanations = extracted.map_err(|e| anyhow!("{e}"))?;

    for e in &explanations {
        if e.empty_mask {
            warnings.push(format!(
                "fold {fold_index}: class '{}' kept no concepts; formula is False",
                e.class_name
            ));
        }
        if e.minimization_skipped {
            warnings.push(format!(
                "fold {fold_index}: class '{}' kept {} concepts, above the minimization limit; \
                 reporting the unminimized formula",
                e.class_name,
                e.kept_concepts.len()
            ));
        }
        if e.contradictory_patterns > 0 {
            warnings.push(format!(
                "fold {fold_index}: class '{}' saw {} colliding boolean patterns with both outputs",
                e.class_name, e.contradictory_patterns
            ));
        }
    }

    let formulas: Vec<DnfFormula> = explanations.iter().map(|e| e.formula.clone()).collect();
    let model_accuracy =
        metrics::model_accuracy(&network, &test_set).map_err(|e| anyhow!("{e}"))?;
    let class_results =
        metrics::evaluate_explanations(&formulas, &network, &test_set, train_config.epsilon)
            .map_err(|e| anyhow!("{e}"))?;
    let explanation_accuracy =
        metrics::mean(&class_results.iter().map(|c| c.f1_on_test).collect::<Vec<_>>());

    let per_class = class_results
        .iter()
        .map(|c| PerClassReport {
            name: c.class_name.clone(),
            formula: render(&c.formula, RenderStyle::Ascii),
            f1: c.f1_on_test,
            complexity_literals: c.complexity_literals,
            complexity_minterms: c.complexity_minterms,
            fidelity: c.fidelity,
        })
        .collect();

    Ok(FoldOutcome {
        report: FoldReport {
            fold: fold_index,
            seed: fold_seed,
            model_accuracy,
            explanation_accuracy,
            per_class,
            time_train_s,
            time_extract_s,
        },
        explanations,
        warnings,
    })
}

/// Stratified k-fold cross-validation with consistency across folds.
pub fn crossval(config: &ExperimentConfig) -> Result<CrossvalOutcome> {
    config.validate()?;
    let dataset = build_dataset(config)?;
    let folds = config.extract.folds;
    let base_train = config.train_config()?;
    let assignment = assign_folds(
        &dataset,
        folds,
        derive_seed(config.train.seed, STREAM_FOLDS),
        config.extract.stratified,
    )
    .map_err(|e| anyhow!("{e}"))?;

    // Run folds on up to `cap` worker threads over disjoint slot chunks;
    // results land by fold index, so thread count never changes the report.
    let cap = thread_cap().min(folds).max(1);
    let mut slots: Vec<Option<Result<FoldOutcome>>> = Vec::new();
    slots.resize_with(folds, || None);
    if cap <= 1 {
        for (f, slot) in slots.iter_mut().enumerate() {
            *slot = Some(run_fold(config, &dataset, f, &assignment[f], &base_train));
        }
    } else {
        let chunk_size = folds.div_ceil(cap);
        let dataset_ref = &dataset;
        let assignment_ref = &assignment;
        let base_train_ref = &base_train;
        std::thread::scope(|scope| {
            for (ci, chunk) in slots.chunks_mut(chunk_size).enumerate() {
                let base = ci * chunk_size;
                scope.spawn(move || {
                    for (offset, slot) in chunk.iter_mut().enumerate() {
                        let f = base + offset;
                        *slot = Some(run_fold(
                            config,
                            dataset_ref,
                            f,
                            &assignment_ref[f],
                            base_train_ref,
                        ));
                    }
                });
            }
        });
    }

    let mut fold_reports = Vec::with_capacity(folds);
    let mut fold_formulas = Vec::with_capacity(folds);
    let mut warnings = Vec::new();
    let mut concept_sets: Vec<Vec<BTreeSet<String>>> = Vec::with_capacity(folds);
    for slot in slots {
        let outcome = slot.expect("every fold ran")?;
        warnings.extend(outcome.warnings);
        concept_sets.push(
            outcome
                .explanations
                .iter()
                .map(|e| e.formula.concept_names().into_iter().collect())
                .collect(),
        );
        fold_formulas.push(
            outcome
                .explanations
                .iter()
                .map(|e| (e.class_name.clone(), e.formula.clone()))
                .collect(),
        );
        fold_reports.push(outcome.report);
    }

    if config.output.zero_times {
        for fold in &mut fold_reports {
            fold.time_train_s = 0.0;
            fold.time_extract_s = 0.0;
        }
    }

    let consistency_report = metrics::consistency(&concept_sets).map_err(|e| anyhow!("{e}"))?;
    for class in &consistency_report.empty_classes {
        warnings.push(format!(
            "class '{}' produced an empty formula in every fold; consistency contributes 0",
            dataset.class_names[*class]
        ));
    }

    let aggregate = aggregate_folds(&fold_reports);
    Ok(CrossvalOutcome {
        report: Report {
            config_echo: config.clone(),
            folds: fold_reports,
            aggregate,
            consistency: consistency_report.mean,
        },
        fold_formulas,
        warnings,
    })
}

fn aggregate_folds(folds: &[FoldReport]) -> Aggregate {
    let collect = |f: &dyn Fn(&FoldReport) -> f64| folds.iter().map(f).collect::<Vec<f64>>();
    let model = collect(&|f| f.model_accuracy);
    let expl = collect(&|f| f.explanation_accuracy);
    let fid = collect(&|f| {
        metrics::mean(&f.per_class.iter().map(|c| c.fidelity).collect::<Vec<_>>())
    });
    let lits = collect(&|f| {
        metrics::mean(
            &f.per_class
                .iter()
                .map(|c| c.complexity_literals as f64)
                .collect::<Vec<_>>(),
        )
    });
    let mins = collect(&|f| {
        metrics::mean(
            &f.per_class
                .iter()
                .map(|c| c.complexity_minterms as f64)
                .collect::<Vec<_>>(),
        )
    });
    let t_train = collect(&|f| f.time_train_s);
    let t_extract = collect(&|f| f.time_extract_s);
    let t_total = collect(&|f| f.time_train_s + f.time_extract_s);
    Aggregate {
        model_accuracy_mean: metrics::mean(&model),
        model_accuracy_sem: metrics::standard_error(&model),
        explanation_accuracy_mean: metrics::mean(&expl),
        explanation_accuracy_sem: metrics::standard_error(&expl),
        fidelity_mean: metrics::mean(&fid),
        fidelity_sem: metrics::standard_error(&fid),
        complexity_literals_mean: metrics::mean(&lits),
        complexity_literals_sem: metrics::standard_error(&lits),
        complexity_minterms_mean: metrics::mean(&mins),
        complexity_minterms_sem: metrics::standard_error(&mins),
        time_train_s_mean: metrics::mean(&t_train),
        time_train_s_sem: metrics::standard_error(&t_train),
        time_extract_s_mean: metrics::mean(&t_extract),
        time_extract_s_sem: metrics::standard_error(&t_extract),
        time_total_s_mean: metrics::mean(&t_total),
        time_total_s_sem: metrics::standard_error(&t_total),
    }
}

/// One grid point's aggregated row.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridRow {
    pub lambda: f64,
    pub tau: f64,
    pub model_accuracy_mean: f64,
    pub model_accuracy_sem: f64,
    pub explanation_accuracy_mean: f64,
    pub explanation_accuracy_sem: f64,
    pub complexity_literals_mean: f64,
    pub complexity_literals_sem: f64,
}

pub struct GridOutcome {
    pub rows: Vec<GridRow>,
    pub reports: Vec<Report>,
    pub warnings: Vec<String>,
}

/// One crossval per `(lambda, tau)` grid point.
pub fn grid_sweep(config: &ExperimentConfig, lambdas: &[f64], taus: &[f64]) -> Result<GridOutcome> {
    if lambdas.is_empty() || taus.is_empty() {
        bail!("grid sweep needs non-empty lambda and tau lists");
    }
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut warnings = Vec::new();
    for &lambda in lambdas {
        for &tau in taus {
            let mut point = config.clone();
            point.train.lambda = lambda;
            point.train.tau = tau;
            let outcome = crossval(&point)?;
            let a = &outcome.report.aggregate;
            rows.push(GridRow {
                lambda,
                tau,
                model_accuracy_mean: a.model_accuracy_mean,
                model_accuracy_sem: a.model_accuracy_sem,
                explanation_accuracy_mean: a.explanation_accuracy_mean,
                explanation_accuracy_sem: a.explanation_accuracy_sem,
                complexity_literals_mean: a.complexity_literals_mean,
                complexity_literals_sem: a.complexity_literals_sem,
            });
            warnings.extend(outcome.warnings);
            reports.push(outcome.report);
        }
    }
    Ok(GridOutcome {
        rows,
        reports,
        warnings,
    })
}

/// Markdown rendering of the grid table.
pub fn grid_markdown(rows: &[GridRow]) -> String {
    let pct = |v: f64| format!("{:.2}", v * 100.0);
    let mut out = String::from(
        "| lambda | tau | model accuracy (%) | explanation accuracy (%) | complexity (literals) |\n|---|---|---|---|---|\n",
    );
    for row in rows {
        out.push_str(&format!(
            "| {:e} | {} | {} ± {} | {} ± {} | {:.2} ± {:.2} |\n",
            row.lambda,
            row.tau,
            pct(row.model_accuracy_mean),
            pct(row.model_accuracy_sem),
            pct(row.explanation_accuracy_mean),
            pct(row.explanation_accuracy_sem),
            row.complexity_literals_mean,
            row.complexity_literals_sem
        ));
    }
    out
}

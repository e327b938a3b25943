//! `entropy-lens`: train entropy-gated concept networks, distill their
//! decision process into DNF logic formulas, and evaluate the explanations.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use entropy_lens::config::{ExperimentConfig, Overrides};
use entropy_lens::experiment::{self, build_dataset};
use entropy_lens::model_store::{self, ModelMeta};
use entropy_lens::report::Report;
use entropy_lens::csvio;
use entropy_lens_core::dataset::{synth_parity, synth_toy};
use entropy_lens_core::explain::explain_all;
use entropy_lens_core::logic::{parse, render, DnfFormula, RenderStyle};
use entropy_lens_core::metrics;
use entropy_lens_core::train::train;

#[derive(Parser)]
#[command(
    name = "entropy-lens",
    version,
    about = "Entropy-gated concept networks with first-order-logic explanations",
    propagate_version = true
)]
struct Cli {
    /// Print per-fold diagnostics in addition to warnings.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
    /// Train a network on a dataset and save the model artifact.
    Train(ConfigArgs),
    /// Print (and optionally save) the formulas a trained model induces.
    Explain(ExplainArgs),
    /// Evaluate saved formulas and a model against a dataset.
    Eval(EvalArgs),
    /// Stratified k-fold cross-validation with a full report.
    Crossval(ConfigArgs),
    /// Hyperparameter grid sweep: one crossval per (lambda, tau) point.
    Grid(GridArgs),
    /// Render an existing report JSON as a Markdown summary.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum SynthKind {
    /// Eight-row XOR/OR table over x1..x4 plus zero padding concepts.
    Toy {
        /// Number of always-zero padding concepts.
        #[arg(long, default_value_t = 100)]
        pad: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// One-hot digit concepts labelled even/odd, with optional bit noise.
    Parity {
        /// Sample count.
        #[arg(short, long, default_value_t = 2000)]
        n: usize,
        /// Per-bit flip probability in [0, 0.5).
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Generator seed.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset: `toy` or `parity`.
    #[arg(long)]
    preset: Option<String>,
    /// Experiment seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Sparsity penalty weight override.
    #[arg(long)]
    lambda: Option<f64>,
    /// Softmax temperature override.
    #[arg(long)]
    tau: Option<f64>,
    /// Training epoch count override.
    #[arg(long)]
    epochs: Option<usize>,
    /// Cross-validation fold count override.
    #[arg(long)]
    folds: Option<usize>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Formula style override: unicode | ascii | dnf-canonical.
    #[arg(long)]
    style: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::resolve(
            self.config.as_deref(),
            self.preset.as_deref(),
            &Overrides {
                seed: self.seed,
                lambda: self.lambda,
                tau: self.tau,
                epochs: self.epochs,
                folds: self.folds,
                out: self.out.clone(),
                style: self.style.clone(),
            },
        )
    }
}

#[derive(Args)]
struct ExplainArgs {
    /// Model artifact saved by `train` or `crossval`.
    #[arg(long)]
    model: PathBuf,
    /// Dataset CSV; target columns default to the model's class names.
    #[arg(long)]
    data: PathBuf,
    /// Explain a single class by name.
    #[arg(long)]
    class: Option<String>,
    /// Formula style: unicode | ascii | dnf-canonical.
    #[arg(long, default_value = "unicode")]
    style: String,
    /// Variable limit for exact minimization.
    #[arg(long, default_value_t = 16)]
    qm_limit: usize,
    /// Also write the formulas in the ascii grammar to this file.
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Formula file in the ascii grammar (`name: formula` per line).
    #[arg(long)]
    formulas: PathBuf,
    /// Write the evaluation as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated lambda grid, e.g. `1e-7,1e-5`.
    #[arg(long, value_delimiter = ',', required = true)]
    lambda_grid: Vec<f64>,
    /// Comma-separated tau grid, e.g. `4,6`.
    #[arg(long, value_delimiter = ',', required = true)]
    tau_grid: Vec<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Report JSON produced by `crossval`.
    #[arg(long)]
    report: PathBuf,
    /// Write the Markdown here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Tracks files written by the current command so a late failure removes
/// partial artifacts.
struct ArtifactWriter {
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    fn new() -> Self {
        Self { written: Vec::new() }
    }

    fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
        }
        std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    fn discard_partial(&self) {
        for path in &self.written {
            let _ = std::fs::remove_file(path);
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { kind } => cmd_synth(kind),
        Command::Train(args) => cmd_train(&args.resolve()?, cli.verbose),
        Command::Explain(args) => cmd_explain(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Crossval(args) => cmd_crossval(&args.resolve()?, cli.verbose),
        Command::Grid(args) => cmd_grid(
            &args.config.resolve()?,
            &args.lambda_grid,
            &args.tau_grid,
            cli.verbose,
        ),
        Command::Report(args) => cmd_report(&args),
    }
}

fn style_of(name: &str) -> Result<RenderStyle> {
    match name {
        "unicode" => Ok(RenderStyle::Unicode),
        "ascii" => Ok(RenderStyle::Ascii),
        "dnf-canonical" => Ok(RenderStyle::DnfCanonical),
        other => bail!("unknown style '{other}' (unicode | ascii | dnf-canonical)"),
    }
}

fn cmd_synth(kind: SynthKind) -> Result<()> {
    let (dataset, out) = match kind {
        SynthKind::Toy { pad, out } => (synth_toy(pad), out),
        SynthKind::Parity { n, noise, seed, out } => (
            synth_parity(n, noise, seed).map_err(|e| anyhow!("{e}"))?,
            out,
        ),
    };
    csvio::write_dataset(&dataset, &out)?;
    println!(
        "wrote {}: {} rows, {} concepts, {} targets",
        out.display(),
        dataset.samples(),
        dataset.concept_count(),
        dataset.class_count()
    );
    Ok(())
}

fn echo_run(config: &ExperimentConfig) {
    eprintln!(
        "seed: {} | dataset: {} | lambda: {:e} | tau: {} | epochs: {} | folds: {}",
        config.train.seed,
        config.dataset.kind,
        config.train.lambda,
        config.train.tau,
        config.train.max_epochs,
        config.extract.folds
    );
}

fn cmd_train(config: &ExperimentConfig, verbose: bool) -> Result<()> {
    echo_run(config);
    let dataset = build_dataset(config)?;
    let train_config = config.train_config()?;
    let network = entropy_lens_core::train::EntropyNetwork::new(
        dataset.concept_count(),
        dataset.class_count(),
        &train_config,
    )
    .map_err(|e| anyhow!("{e}"))?;
    let (network, history) =
        train(network, &dataset, &dataset, &train_config).map_err(|e| anyhow!("{e}"))?;

    let mut writer = ArtifactWriter::new();
    let result = (|| -> Result<()> {
        let model_path = config.output.dir.join("model.json");
        let meta = ModelMeta {
            concept_names: dataset.concept_names.clone(),
            class_names: dataset.class_names.clone(),
            epsilon: config.train.epsilon,
        };
        // save_model writes directly; route through the writer for cleanup.
        if let Some(parent) = model_path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        model_store::save_model(&model_path, &network, &meta)?;
        writer.written.push(model_path.clone());

        let history_json = serde_json::json!({
            "epochs": history.epochs.iter().map(|e| serde_json::json!({
                "total_loss": e.total_loss,
                "task_loss": e.task_loss,
                "regularizer_value": e.regularizer_value,
                "train_accuracy": e.train_accuracy,
                "val_accuracy": e.val_accuracy,
            })).collect::<Vec<_>>(),
            "best_epoch": history.best_epoch,
        });
        writer.write(
            &config.output.dir.join("history.json"),
            &(serde_json::to_string_pretty(&history_json)? + "\n"),
        )?;

        if let Some(last) = history.epochs.last() {
            println!(
                "trained {} epochs: train accuracy {:.4}, val accuracy {:.4}",
                history.epochs.len(),
                last.train_accuracy,
                last.val_accuracy
            );
            if verbose {
                println!(
                    "final loss {:.6} (task {:.6}, regularizer {:.6}), best epoch {:?}",
                    last.total_loss, last.task_loss, last.regularizer_value, history.best_epoch
                );
            }
        }
        println!("model: {}", config.output.dir.join("model.json").display());
        Ok(())
    })();
    if result.is_err() {
        writer.discard_partial();
    }
    result
}

fn load_data_for_model(data: &Path, meta: &ModelMeta) -> Result<entropy_lens_core::ConceptDataset> {
    csvio::read_dataset(data, &meta.class_names, &[])
}

fn cmd_explain(args: &ExplainArgs) -> Result<()> {
    let style = style_of(&args.style)?;
    let (network, meta) = model_store::load_model(&args.model)?;
    let dataset = load_data_for_model(&args.data, &meta)?;
    if dataset.concept_names != meta.concept_names {
        bail!(
            "dataset concepts do not match the model (got {:?}…)",
            dataset.concept_names.iter().take(4).collect::<Vec<_>>()
        );
    }

    let class_filter: Option<usize> = match &args.class {
        None => None,
        Some(name) => Some(
            meta.class_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| {
                    anyhow!(
                        "unknown class '{name}'; valid classes: {}",
                        meta.class_names.join(", ")
                    )
                })?,
        ),
    };

    let explanations = explain_all(&network, &dataset, &dataset, meta.epsilon, args.qm_limit)
        .map_err(|e| anyhow!("{e}"))?;
    let formulas: Vec<DnfFormula> = explanations.iter().map(|e| e.formula.clone()).collect();
    let fidelities = metrics::per_class_fidelity(&formulas, &network, &dataset, meta.epsilon)
        .map_err(|e| anyhow!("{e}"))?;

    for e in &explanations {
        if let Some(wanted) = class_filter {
            if e.class_index != wanted {
                continue;
            }
        }
        println!(
            "{} <-> {}   [complexity {}, fidelity {:.2}%]",
            e.class_name,
            render(&e.formula, style),
            metrics::complexity(&e.formula),
            fidelities[e.class_index] * 100.0
        );
    }

    if let Some(path) = &args.save {
        let mut writer = ArtifactWriter::new();
        let mut text = String::new();
        for e in &explanations {
            text.push_str(&format!(
                "{}: {}\n",
                e.class_name,
                render(&e.formula, RenderStyle::Ascii)
            ));
        }
        writer.write(path, &text)?;
        println!("formulas: {}", path.display());
    }
    Ok(())
}

/// Reads a `name: formula` file against the model's class order.
fn read_formula_file(
    path: &Path,
    concept_names: &[String],
    class_names: &[String],
) -> Result<Vec<DnfFormula>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut by_name = std::collections::BTreeMap::new();
    for (li, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, formula_text) = line
            .split_once(':')
            .ok_or_else(|| anyhow!("line {} is not 'name: formula'", li + 1))?;
        let class = class_names
            .iter()
            .position(|c| c == name.trim())
            .ok_or_else(|| anyhow!("line {}: unknown class '{}'", li + 1, name.trim()))?;
        let formula =
            parse(formula_text.trim(), concept_names, class).map_err(|e| anyhow!("{e}"))?;
        by_name.insert(class, formula);
    }
    class_names
        .iter()
        .enumerate()
        .map(|(class, name)| {
            by_name
                .remove(&class)
                .ok_or_else(|| anyhow!("no formula for class '{name}' in {}", path.display()))
        })
        .collect()
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let (network, meta) = model_store::load_model(&args.model)?;
    let dataset = load_data_for_model(&args.data, &meta)?;
    let formulas = read_formula_file(&args.formulas, &meta.concept_names, &meta.class_names)?;

    let model_accuracy =
        metrics::model_accuracy(&network, &dataset).map_err(|e| anyhow!("{e}"))?;
    let results = metrics::evaluate_explanations(&formulas, &network, &dataset, meta.epsilon)
        .map_err(|e| anyhow!("{e}"))?;
    let explanation_accuracy =
        metrics::mean(&results.iter().map(|c| c.f1_on_test).collect::<Vec<_>>());

    println!("model accuracy:      {:.2}%", model_accuracy * 100.0);
    println!("explanation accuracy: {:.2}%", explanation_accuracy * 100.0);
    for c in &results {
        println!(
            "  {}: F1 {:.2}%, fidelity {:.2}%, complexity {} literals / {} terms",
            c.class_name,
            c.f1_on_test * 100.0,
            c.fidelity * 100.0,
            c.complexity_literals,
            c.complexity_minterms
        );
    }

    if let Some(out) = &args.out {
        let mut writer = ArtifactWriter::new();
        let json = serde_json::json!({
            "model_accuracy": model_accuracy,
            "explanation_accuracy": explanation_accuracy,
            "per_class": results.iter().map(|c| serde_json::json!({
                "name": c.class_name,
                "f1": c.f1_on_test,
                "fidelity": c.fidelity,
                "complexity_literals": c.complexity_literals,
                "complexity_minterms": c.complexity_minterms,
            })).collect::<Vec<_>>(),
        });
        writer.write(out, &(serde_json::to_string_pretty(&json)? + "\n"))?;
        println!("evaluation: {}", out.display());
    }
    Ok(())
}

fn cmd_crossval(config: &ExperimentConfig, verbose: bool) -> Result<()> {
    echo_run(config);
    let outcome = experiment::crossval(config)?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    if verbose {
        for fold in &outcome.report.folds {
            eprintln!(
                "fold {}: model {:.4}, explanation {:.4}, train {:.2}s, extract {:.2}s",
                fold.fold,
                fold.model_accuracy,
                fold.explanation_accuracy,
                fold.time_train_s,
                fold.time_extract_s
            );
        }
    }

    let mut writer = ArtifactWriter::new();
    let result = (|| -> Result<()> {
        writer.write(
            &config.output.dir.join("report.json"),
            &outcome.report.to_json()?,
        )?;
        writer.write(
            &config.output.dir.join("summary.md"),
            &outcome.report.markdown_summary(),
        )?;
        for (f, formulas) in outcome.fold_formulas.iter().enumerate() {
            let mut text = String::new();
            for (name, formula) in formulas {
                text.push_str(&format!(
                    "{}: {}\n",
                    name,
                    render(formula, RenderStyle::Ascii)
                ));
            }
            writer.write(
                &config.output.dir.join(format!("fold_{f}_formulas.txt")),
                &text,
            )?;
        }
        Ok(())
    })();
    if result.is_err() {
        writer.discard_partial();
        return result;
    }

    print!("{}", outcome.report.markdown_summary());
    println!("report: {}", config.output.dir.join("report.json").display());
    Ok(())
}

fn cmd_grid(
    config: &ExperimentConfig,
    lambdas: &[f64],
    taus: &[f64],
    verbose: bool,
) -> Result<()> {
    echo_run(config);
    let outcome = experiment::grid_sweep(config, lambdas, taus)?;
    if verbose {
        for warning in &outcome.warnings {
            eprintln!("warning: {warning}");
        }
    }
    let mut writer = ArtifactWriter::new();
    let result = (|| -> Result<()> {
        let json = serde_json::to_string_pretty(&outcome.rows)? + "\n";
        writer.write(&config.output.dir.join("grid.json"), &json)?;
        writer.write(
            &config.output.dir.join("grid.md"),
            &experiment::grid_markdown(&outcome.rows),
        )?;
        for (i, report) in outcome.reports.iter().enumerate() {
            let row = &outcome.rows[i];
            let dir = config
                .output
                .dir
                .join(format!("lambda_{:e}_tau_{}", row.lambda, row.tau));
            writer.write(&dir.join("report.json"), &report.to_json()?)?;
        }
        Ok(())
    })();
    if result.is_err() {
        writer.discard_partial();
        return result;
    }
    print!("{}", experiment::grid_markdown(&outcome.rows));
    println!("grid report: {}", config.output.dir.join("grid.json").display());
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    if !args.report.exists() {
        bail!("report not found: {}", args.report.display());
    }
    let text = std::fs::read_to_string(&args.report)
        .with_context(|| format!("reading {}", args.report.display()))?;
    let report = Report::from_json(&text)?;
    let markdown = report.markdown_summary();
    match &args.out {
        Some(path) => {
            let mut writer = ArtifactWriter::new();
            writer.write(path, &markdown)?;
            println!("summary: {}", path.display());
        }
        None => print!("{markdown}"),
    }
    Ok(())
}

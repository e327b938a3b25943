//! Experiment configuration: a flat TOML document with `[dataset]`,
//! `[train]`, `[extract]` and `[output]` sections. Unknown keys are hard
//! errors. Named presets bake in known-good hyperparameters so standard
//! runs are one flag; command-line overrides always win over file values.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use entropy_lens_core::math::Activation;
use entropy_lens_core::train::{RegularizerKind, TaskLossKind, TrainConfig};
use entropy_lens_core::logic::RenderStyle;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dataset: DatasetSection,
    pub train: TrainSection,
    pub extract: ExtractSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    /// `toy`, `parity`, or `csv`.
    pub kind: String,
    /// CSV path (csv kind only).
    pub path: Option<PathBuf>,
    /// Names of the target columns (csv kind only).
    pub targets: Vec<String>,
    /// Raw columns to tercile-encode into LOW/NORMAL/HIGH concepts.
    pub discretize: Vec<String>,
    /// Zero-padding concepts appended to the toy table.
    pub pad: usize,
    /// Parity sample count.
    pub n: usize,
    /// Parity concept-bit flip probability.
    pub noise: f64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            kind: "toy".into(),
            path: None,
            targets: Vec::new(),
            discretize: Vec::new(),
            pad: 100,
            n: 2000,
            noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub lambda: f64,
    pub tau: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub epsilon: f64,
    /// `entropy`, `l1`, or `none`.
    pub regularizer: String,
    /// `softmax` (cross-entropy over class logits) or `sigmoid`
    /// (independent per-class cross-entropy).
    pub task_loss: String,
    pub seed: u64,
    pub early_stopping: bool,
    pub weight_decay: f64,
    pub hidden: Vec<usize>,
    /// `leaky_relu` or `relu`.
    pub activation: String,
    pub leaky_slope: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            tau: 0.7,
            learning_rate: 1e-2,
            max_epochs: 200,
            epsilon: 0.5,
            regularizer: "entropy".into(),
            task_loss: "softmax".into(),
            seed: 1,
            early_stopping: true,
            weight_decay: 0.0,
            hidden: vec![10],
            activation: "leaky_relu".into(),
            leaky_slope: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractSection {
    pub folds: usize,
    pub qm_var_limit: usize,
    pub stratified: bool,
}

impl Default for ExtractSection {
    fn default() -> Self {
        Self {
            folds: 5,
            qm_var_limit: 16,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// `unicode`, `ascii`, or `dnf-canonical`.
    pub style: String,
    /// Write timing fields as zero so reports are byte-reproducible.
    pub zero_times: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            style: "unicode".into(),
            zero_times: false,
        }
    }
}

/// Command-line overrides; every populated field wins over the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub lambda: Option<f64>,
    pub tau: Option<f64>,
    pub epochs: Option<usize>,
    pub folds: Option<usize>,
    pub out: Option<PathBuf>,
    pub style: Option<String>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        if !path.exists() {
            bail!("config not found: {}", path.display());
        }
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: Self = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    /// The two built-in presets with their known-good hyperparameters. Both
    /// train to full convergence (no early stopping): the toy protocol calls
    /// for complete convergence, and on noise-free synthetic data an early
    /// snapshot would freeze the gate before it separates.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "toy" => Ok(Self {
                dataset: DatasetSection {
                    kind: "toy".into(),
                    pad: 100,
                    ..DatasetSection::default()
                },
                train: TrainSection {
                    lambda: 1e-4,
                    tau: 0.3,
                    learning_rate: 1e-4,
                    max_epochs: 18_000,
                    hidden: vec![20, 10],
                    early_stopping: false,
                    task_loss: "sigmoid".into(),
                    ..TrainSection::default()
                },
                extract: ExtractSection::default(),
                output: OutputSection {
                    dir: PathBuf::from("out/toy"),
                    ..OutputSection::default()
                },
            }),
            "parity" => Ok(Self {
                dataset: DatasetSection {
                    kind: "parity".into(),
                    n: 2000,
                    noise: 0.0,
                    ..DatasetSection::default()
                },
                train: TrainSection {
                    lambda: 1e-7,
                    tau: 5.0,
                    learning_rate: 1e-2,
                    max_epochs: 200,
                    hidden: vec![10],
                    early_stopping: false,
                    ..TrainSection::default()
                },
                extract: ExtractSection::default(),
                output: OutputSection {
                    dir: PathBuf::from("out/parity"),
                    ..OutputSection::default()
                },
            }),
            other => bail!("unknown preset '{other}' (expected 'toy' or 'parity')"),
        }
    }

    /// Resolve from `--config` or `--preset` (exactly one), then apply flag
    /// overrides.
    pub fn resolve(
        config_path: Option<&Path>,
        preset: Option<&str>,
        overrides: &Overrides,
    ) -> Result<Self> {
        let mut config = match (config_path, preset) {
            (Some(path), None) => Self::from_file(path)?,
            (None, Some(name)) => Self::preset(name)?,
            (Some(_), Some(_)) => bail!("pass either --config or --preset, not both"),
            (None, None) => bail!("a configuration is required: pass --config or --preset"),
        };
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.train.seed = seed;
        }
        if let Some(lambda) = overrides.lambda {
            self.train.lambda = lambda;
        }
        if let Some(tau) = overrides.tau {
            self.train.tau = tau;
        }
        if let Some(epochs) = overrides.epochs {
            self.train.max_epochs = epochs;
        }
        if let Some(folds) = overrides.folds {
            self.extract.folds = folds;
        }
        if let Some(out) = &overrides.out {
            self.output.dir = out.clone();
        }
        if let Some(style) = &overrides.style {
            self.output.style = style.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.dataset.kind.as_str() {
            "toy" | "parity" => {}
            "csv" => {
                if self.dataset.path.is_none() {
                    bail!("dataset.kind = \"csv\" requires dataset.path");
                }
                if self.dataset.targets.is_empty() {
                    bail!("dataset.kind = \"csv\" requires dataset.targets");
                }
            }
            other => bail!("unknown dataset.kind '{other}' (toy | parity | csv)"),
        }
        self.render_style()?;
        self.train_config()?.validate().map_err(|e| anyhow!("{e}"))?;
        if self.extract.folds < 2 {
            bail!("extract.folds must be at least 2");
        }
        Ok(())
    }

    pub fn render_style(&self) -> Result<RenderStyle> {
        match self.output.style.as_str() {
            "unicode" => Ok(RenderStyle::Unicode),
            "ascii" => Ok(RenderStyle::Ascii),
            "dnf-canonical" => Ok(RenderStyle::DnfCanonical),
            other => bail!("unknown style '{other}' (unicode | ascii | dnf-canonical)"),
        }
    }

    /// Core training configuration for this experiment.
    pub fn train_config(&self) -> Result<TrainConfig> {
        let regularizer = match self.train.regularizer.as_str() {
            "entropy" => RegularizerKind::Entropy,
            "l1" => RegularizerKind::L1,
            "none" => RegularizerKind::None,
            other => bail!("unknown regularizer '{other}' (entropy | l1 | none)"),
        };
        let task_loss = match self.train.task_loss.as_str() {
            "softmax" => TaskLossKind::SoftmaxCrossEntropy,
            "sigmoid" => TaskLossKind::PerClassSigmoid,
            other => bail!("unknown task_loss '{other}' (softmax | sigmoid)"),
        };
        let activation = match self.train.activation.as_str() {
            "leaky_relu" => Activation::LeakyRelu {
                slope: self.train.leaky_slope,
            },
            "relu" => Activation::Relu,
            other => bail!("unknown activation '{other}' (leaky_relu | relu)"),
        };
        Ok(TrainConfig {
            lambda: self.train.lambda,
            tau: self.train.tau,
            learning_rate: self.train.learning_rate,
            max_epochs: self.train.max_epochs,
            epsilon: self.train.epsilon,
            regularizer,
            task_loss,
            seed: self.train.seed,
            early_stopping: self.train.early_stopping,
            weight_decay: self.train.weight_decay,
            hidden: self.train.hidden.clone(),
            activation,
        })
    }
}

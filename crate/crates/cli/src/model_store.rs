//! Trained-model persistence: a single versioned JSON document holding
//! shapes plus decimal weights. Floats serialize through shortest-roundtrip
//! formatting, so loading reproduces every parameter bit for bit and diffs
//! stay reviewable.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use entropy_lens_core::entropy::EntropyHead;
use entropy_lens_core::math::{Activation, Matrix};
use entropy_lens_core::train::{ClassNet, DenseLayer, EntropyNetwork};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

/// Dataset-facing metadata persisted next to the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub concept_names: Vec<String>,
    pub class_names: Vec<String>,
    pub epsilon: f64,
}

#[derive(Serialize, Deserialize)]
struct StoredModel {
    format_version: u32,
    concept_names: Vec<String>,
    class_names: Vec<String>,
    epsilon: f64,
    tau: f64,
    activation: StoredActivation,
    heads: Vec<StoredHead>,
}

#[derive(Serialize, Deserialize)]
struct StoredActivation {
    kind: String,
    slope: f64,
}

#[derive(Serialize, Deserialize)]
struct StoredHead {
    class_index: usize,
    gate_layer: StoredLayer,
    trunk: Vec<StoredLayer>,
}

#[derive(Serialize, Deserialize)]
struct StoredLayer {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

fn layer_of(weights: &Matrix, bias: &[f64]) -> StoredLayer {
    StoredLayer {
        rows: weights.rows(),
        cols: weights.cols(),
        weights: weights.data().to_vec(),
        bias: bias.to_vec(),
    }
}

pub fn save_model(path: &Path, network: &EntropyNetwork, meta: &ModelMeta) -> Result<()> {
    let (kind, slope) = match network.activation() {
        Activation::Relu => ("relu", 0.0),
        Activation::LeakyRelu { slope } => ("leaky_relu", slope),
    };
    let stored = StoredModel {
        format_version: FORMAT_VERSION,
        concept_names: meta.concept_names.clone(),
        class_names: meta.class_names.clone(),
        epsilon: meta.epsilon,
        tau: network.heads()[0].head.tau,
        activation: StoredActivation {
            kind: kind.into(),
            slope,
        },
        heads: network
            .heads()
            .iter()
            .map(|h| StoredHead {
                class_index: h.head.class_index,
                gate_layer: layer_of(&h.head.weights, &h.head.bias),
                trunk: h
                    .trunk
                    .iter()
                    .map(|l| layer_of(&l.weights, &l.bias))
                    .collect(),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&stored)?;
    std::fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(EntropyNetwork, ModelMeta)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let stored: StoredModel = serde_json::from_str(&text)
        .with_context(|| format!("parsing model {}", path.display()))?;
    if stored.format_version != FORMAT_VERSION {
        bail!(
            "model {} has format version {}, this build reads {}",
            path.display(),
            stored.format_version,
            FORMAT_VERSION
        );
    }
    let activation = match stored.activation.kind.as_str() {
        "relu" => Activation::Relu,
        "leaky_relu" => Activation::LeakyRelu {
            slope: stored.activation.slope,
        },
        other => bail!("unknown stored activation '{other}'"),
    };
    let mut heads = Vec::with_capacity(stored.heads.len());
    for sh in stored.heads {
        let weights = Matrix::new(sh.gate_layer.rows, sh.gate_layer.cols, sh.gate_layer.weights)
            .map_err(|e| anyhow!("{e}"))?;
        let head = EntropyHead::new(sh.class_index, weights, sh.gate_layer.bias, stored.tau)
            .map_err(|e| anyhow!("{e}"))?;
        let mut trunk = Vec::with_capacity(sh.trunk.len());
        for layer in sh.trunk {
            trunk.push(DenseLayer {
                weights: Matrix::new(layer.rows, layer.cols, layer.weights)
                    .map_err(|e| anyhow!("{e}"))?,
                bias: layer.bias,
            });
        }
        heads.push(ClassNet { head, trunk });
    }
    let network = EntropyNetwork::from_parts(heads, activation).map_err(|e| anyhow!("{e}"))?;
    if stored.concept_names.len() != network.concept_count() {
        bail!(
            "model {} names {} concepts but its gate layer reads {}",
            path.display(),
            stored.concept_names.len(),
            network.concept_count()
        );
    }
    if stored.class_names.len() != network.class_count() {
        bail!(
            "model {} names {} classes but has {} heads",
            path.display(),
            stored.class_names.len(),
            network.class_count()
        );
    }
    Ok((
        network,
        ModelMeta {
            concept_names: stored.concept_names,
            class_names: stored.class_names,
            epsilon: stored.epsilon,
        },
    ))
}

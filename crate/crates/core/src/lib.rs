//! Entropy-gated concept networks that classify from human-interpretable
//! concept activations and distill their own decision process into
//! first-order-logic formulas in disjunctive normal form.
//!
//! The crate is organised bottom-up:
//!
//! - [`math`] — dense matrix/vector arithmetic, activations, stable reductions
//! - [`entropy`] — the gated linear layer: concept relevance, temperature
//!   softmax attention, input gating, and empirical truth tables
//! - [`dataset`] — concept datasets, synthetic generators, stratified folds
//! - [`train`] — multi-head networks, loss, manual reverse-mode gradients,
//!   AdamW with early stopping
//! - [`logic`] — DNF formulas: extraction, greedy aggregation, Quine–McCluskey
//!   minimization, evaluation, rendering and parsing
//! - [`explain`] — per-class extraction pipeline tying the above together
//! - [`metrics`] — the quantitative evaluation measures with fold aggregation
//!
//! The core is `no_std`-compatible (with `alloc`); all file formats, timing
//! and the CLI live in the companion `entropy-lens` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dataset;
pub mod entropy;
pub mod error;
pub mod explain;
mod fp;
pub mod gradcheck;
pub mod logic;
pub mod math;
pub mod metrics;
pub mod optim;
pub mod rng;
pub mod train;

pub use dataset::ConceptDataset;
pub use entropy::{ConceptMask, ConceptScores, EntropyHead, TruthTable};
pub use error::Error;
pub use logic::{DnfFormula, Literal, Minterm, RenderStyle};
pub use math::Matrix;
pub use train::{EntropyNetwork, RegularizerKind, TrainConfig, TrainHistory};

//! Error type shared across the core modules.

use alloc::string::String;
use core::fmt;

/// Errors reported by core operations.
///
/// Shape mismatches between internal buffers are treated as programming
/// errors and panic with the offending shapes instead of returning a variant.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Temperature or another strictly positive configuration value was not.
    InvalidConfig(String),
    /// A concept activation fell outside the unit interval.
    ConceptOutOfRange {
        concept: usize,
        value: f64,
    },
    /// Two buffers that must agree in length did not.
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    /// A truth-table row retained no concepts, so no literal can be formed.
    NoConceptsRetained,
    /// Training produced a non-finite loss.
    NonFiniteLoss {
        epoch: usize,
        total: f64,
        task: f64,
        regularizer: f64,
    },
    /// Dataset construction or validation failed.
    InvalidDataset(String),
    /// A metric was requested on an empty sample set.
    EmptyInput(&'static str),
    /// Formula text did not match the grammar.
    Parse(String),
    /// A class name or index was not found.
    UnknownClass(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::ConceptOutOfRange { concept, value } => write!(
                f,
                "concept {concept} has activation {value} outside [0, 1]"
            ),
            Error::LengthMismatch { what, left, right } => {
                write!(f, "length mismatch in {what}: {left} vs {right}")
            }
            Error::NoConceptsRetained => write!(f, "no concepts retained"),
            Error::NonFiniteLoss {
                epoch,
                total,
                task,
                regularizer,
            } => write!(
                f,
                "non-finite loss at epoch {epoch}: total={total}, task={task}, regularizer={regularizer}"
            ),
            Error::InvalidDataset(msg) => write!(f, "invalid dataset: {msg}"),
            Error::EmptyInput(what) => write!(f, "no samples: {what}"),
            Error::Parse(msg) => write!(f, "formula parse error: {msg}"),
            Error::UnknownClass(name) => write!(f, "unknown class: {name}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

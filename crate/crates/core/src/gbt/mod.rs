//! Gradient-boosted regression trees on squared error.
//!
//! Each boosting round draws a subsample without replacement, grows one
//! depth-limited regression tree on the current residuals using an exact
//! greedy split search, and adds it to the ensemble scaled by the
//! shrinkage factor.

mod format;
mod model;
mod split;
mod tree;

use thiserror::Error;

pub use format::{read_model, write_model, MODEL_MAGIC};
pub use model::{fit, fit_traced, GbtModel};
pub use split::{best_split, SplitCandidate};
pub use tree::{Node, Tree};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GbtError {
    #[error("invalid parameter: {0}")]
    Params(String),
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("feature width mismatch: expected {expected}, got {found}")]
    Width { expected: usize, found: usize },
    #[error("non-finite value in training data at row {0}")]
    NonFinite(usize),
    #[error("invalid tree: {0}")]
    Tree(String),
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for GbtError {
    fn from(e: std::io::Error) -> Self {
        GbtError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtParams {
    pub weak_count: usize,
    pub shrinkage: f64,
    pub subsample_fraction: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams { weak_count: 1000, shrinkage: 0.1, subsample_fraction: 0.8, max_depth: 5, min_samples_leaf: 10, seed: 0 }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<(), GbtError> {
        let err = |m: String| Err(GbtError::Params(m));
        if self.weak_count == 0 {
            return err("weak_count must be positive".into());
        }
        if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            return err(format!("shrinkage must be in (0, 1], got {}", self.shrinkage));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return err(format!("subsample_fraction must be in (0, 1], got {}", self.subsample_fraction));
        }
        if self.max_depth == 0 {
            return err("max_depth must be positive".into());
        }
        if self.min_samples_leaf == 0 {
            return err("min_samples_leaf must be positive".into());
        }
        Ok(())
    }
}

//! Word2vec with negative sampling: parameter storage, the SGD step and the
//! training loop, with target and context matrices that can each be frozen.

mod kernel;
mod matrix;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kernel::{context_mean, log_sigmoid, sigmoid, step_cbow, step_skipgram, SigmoidMode, StepOptions};
pub use matrix::{cosine, dot, init_matrices, EmbeddingMatrix, Frozen, ParamRows, Role, SharedRows};
pub use train::{train, EpochStats, TrainSummary, Trainer, Weights};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    #[default]
    Cbow,
    #[serde(alias = "sg")]
    Skipgram,
}

/// Hyperparameters of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub lr_initial: f64,
    pub lr_min: f64,
    pub epochs: usize,
    pub architecture: Architecture,
    pub freeze_target: bool,
    pub freeze_context: bool,
    pub seed: u64,
    /// Frequent-word downsampling threshold; 0 disables it.
    pub subsample_threshold: f64,
    /// Draw each position's window span uniformly from `1..=window`.
    pub dynamic_window: bool,
    pub mean_context_gradient: bool,
    pub sigmoid: SigmoidMode,
    /// Exponent applied to unigram counts for negative sampling.
    pub negative_exponent: f64,
    /// 1 is deterministic; more workers apply lock-free updates concurrently.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let lr = 0.025;
        TrainConfig {
            dim: 50,
            window: 5,
            negatives: 5,
            lr_initial: lr,
            lr_min: lr * 1e-4,
            epochs: 5,
            architecture: Architecture::Cbow,
            freeze_target: false,
            freeze_context: false,
            seed: 1,
            subsample_threshold: 1e-3,
            dynamic_window: true,
            mean_context_gradient: true,
            sigmoid: SigmoidMode::Exact,
            negative_exponent: 0.75,
            workers: 1,
        }
    }
}

impl TrainConfig {
    /// Sets `lr_initial` and the default floor `lr_initial * 1e-4`.
    pub fn with_learning_rate(mut self, lr: f64) -> Self {
        self.lr_initial = lr;
        self.lr_min = lr * 1e-4;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_owned()));
        if self.dim == 0 {
            return fail("dim must be at least 1");
        }
        if self.window == 0 {
            return fail("window must be at least 1");
        }
        if self.negatives == 0 {
            return fail("negatives must be at least 1");
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1");
        }
        if self.workers == 0 {
            return fail("workers must be at least 1");
        }
        if self.freeze_target && self.freeze_context {
            return fail("cannot freeze both target and context");
        }
        if !(self.lr_min.is_finite() && self.lr_initial.is_finite())
            || self.lr_min < 0.0
            || self.lr_min > self.lr_initial
        {
            return fail("learning rates must satisfy 0 <= lr_min <= lr_initial");
        }
        if !(self.subsample_threshold >= 0.0 && self.subsample_threshold.is_finite()) {
            return fail("subsample threshold must be finite and non-negative");
        }
        if !self.negative_exponent.is_finite() {
            return fail("negative exponent must be finite");
        }
        Ok(())
    }

    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            freeze_context: self.freeze_context,
            freeze_target: self.freeze_target,
            mean_context_gradient: self.mean_context_gradient,
            sigmoid: self.sigmoid,
        }
    }
}

/// Linear decay from `initial` to `min` over `total` processed positions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LrSchedule {
    pub initial: f64,
    pub min: f64,
    pub total: u64,
}

impl LrSchedule {
    pub fn at(&self, processed: u64) -> f64 {
        if self.total == 0 {
            return self.initial;
        }
        let s = processed.min(self.total) as f64;
        self.initial + (self.min - self.initial) * s / self.total as f64
    }
}

//! Model assembly for every variant, the regularized objective, AdaGrad,
//! and the epoch loop with dev-set model selection.

mod fit;
mod model;
mod optim;
mod spec;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fit::{evaluate, fit, EpochLog, FitReport};
pub use model::{assemble, Dropout, Forward, Model};
pub use optim::{adagrad_update, adagrad_update_observed, step, AdagradStats, TrainState};
pub use spec::{ModelSpec, Variant};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Negative conditional log-likelihood.
    #[default]
    Probabilistic,
    /// Structured hinge with Hamming cost.
    LargeMargin,
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "probabilistic" | "prob" | "nll" => Ok(Criterion::Probabilistic),
            "large-margin" | "margin" | "hinge" => Ok(Criterion::LargeMargin),
            _ => Err(Error::config(format!("unknown criterion {s:?}"))),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Probabilistic => "probabilistic",
            Criterion::LargeMargin => "large-margin",
        })
    }
}

/// Dev-set selection metric.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Token accuracy.
    #[default]
    Accuracy,
    /// Chunk F1 over BIO2 spans.
    F1,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "accuracy" | "acc" => Ok(Metric::Accuracy),
            "f1" | "f" | "f-score" => Ok(Metric::F1),
            _ => Err(Error::config(format!("unknown metric {s:?}"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Accuracy => "accuracy",
            Metric::F1 => "f1",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub criterion: Criterion,
    /// AdaGrad base learning rate.
    pub lr: f64,
    /// L2 coefficient, applied per update to the active coordinates.
    pub l2: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Evaluate the dev set every this many epochs (and after the last).
    pub eval_every: usize,
    pub metric: Metric,
    /// Rescale the gradient when its norm exceeds this value.
    pub max_grad_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            criterion: Criterion::Probabilistic,
            lr: 0.1,
            l2: 1e-6,
            epochs: 40,
            seed: 1,
            eval_every: 1,
            metric: Metric::Accuracy,
            max_grad_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::config(format!("l2 must be non-negative, got {}", self.l2)));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if self.eval_every == 0 {
            return Err(Error::config("eval cadence must be at least 1"));
        }
        if let Some(c) = self.max_grad_norm {
            if !(c > 0.0) {
                return Err(Error::config("max gradient norm must be positive"));
            }
        }
        Ok(())
    }
}

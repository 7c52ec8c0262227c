//! Trial evaluation: hyper-parameters, trial requests and results, the
//! built-in surrogate trainer, external trainer processes and the Dice metric.

mod dice;
mod external;
pub mod protocol;
mod surrogate;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use dice::dice_score;
pub use external::{run_external_trial, ExternalTrainer};
pub use surrogate::{
    lr_bump_sigma, optimal_learning_rate, optimizer_amplitude, surrogate_evaluate,
    surrogate_mean_dice, Surrogate,
};

use crate::error::{Error, Result};
use crate::proxynet::{capacity_ratio, full_spec, UNetSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
    Rmsprop,
    Adamax,
    Novograd,
}

impl Optimizer {
    pub const ALL: [Optimizer; 4] = [
        Optimizer::Adam,
        Optimizer::Rmsprop,
        Optimizer::Adamax,
        Optimizer::Novograd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Optimizer::Adam => "adam",
            Optimizer::Rmsprop => "rmsprop",
            Optimizer::Adamax => "adamax",
            Optimizer::Novograd => "novograd",
        }
    }
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Optimizer::ALL
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown optimizer {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub intensity_shift_prob: f64,
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.intensity_shift_prob) {
            return Err(Error::InvalidInput(format!(
                "intensity shift probability must be in [0, 1], got {}",
                self.intensity_shift_prob
            )));
        }
        Ok(())
    }
}

/// Declared GPU-hour cost of a trial: `scale * n_train * capacity * max_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub scale: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self { scale: 1e-3 }
    }
}

impl CostModel {
    pub fn gpu_hours(&self, n_train: usize, capacity: f64, max_steps: u64) -> f64 {
        self.scale * n_train as f64 * capacity * max_steps as f64
    }

    /// Cost of a trial training `network` on `n_train` items, with capacity
    /// measured against the default full network.
    pub fn for_trial(&self, network: &UNetSpec, n_train: usize, max_steps: u64) -> f64 {
        self.gpu_hours(n_train, capacity_ratio(network, &full_spec()), max_steps)
    }
}

/// One hyper-parameter evaluation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub trial_id: String,
    pub seed: u64,
    pub hyperparams: HyperParams,
    pub network: UNetSpec,
    pub train_items: Vec<String>,
    pub val_items: Vec<String>,
    #[serde(default)]
    pub manifest: Option<String>,
    pub max_steps: u64,
    /// Declared cost of this trial under the search's cost model.
    pub gpu_hours: f64,
}

impl TrialSpec {
    pub fn validate(&self) -> Result<()> {
        self.hyperparams.validate()?;
        self.network.validate()?;
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be at least 1".into()));
        }
        let train: HashSet<&str> = self.train_items.iter().map(String::as_str).collect();
        if let Some(dup) = self.val_items.iter().find(|v| train.contains(v.as_str())) {
            return Err(Error::Split(format!(
                "item {dup:?} is in both the training and validation lists"
            )));
        }
        if !(self.gpu_hours.is_finite() && self.gpu_hours >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "declared gpu_hours must be non-negative, got {}",
                self.gpu_hours
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Failed,
}

/// Outcome of one trial. A failed trial reports `val_dice = 0` and a message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_id: String,
    pub val_dice: f64,
    pub test_dice: Option<f64>,
    pub wall_seconds: f64,
    pub gpu_hours: f64,
    pub status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl TrialResult {
    pub fn failed(spec: &TrialSpec, message: impl Into<String>) -> Self {
        Self {
            trial_id: spec.trial_id.clone(),
            val_dice: 0.0,
            test_dice: None,
            wall_seconds: 0.0,
            gpu_hours: spec.gpu_hours,
            status: TrialStatus::Failed,
            message: Some(message.into()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == TrialStatus::Ok
    }
}

/// Something that can turn a trial request into a result.
pub trait Evaluator: Sync {
    fn evaluate(&self, spec: &TrialSpec) -> Result<TrialResult>;

    /// Short description recorded in search reports.
    fn describe(&self) -> String;
}

impl<F> Evaluator for F
where
    F: Fn(&TrialSpec) -> Result<TrialResult> + Sync,
{
    fn evaluate(&self, spec: &TrialSpec) -> Result<TrialResult> {
        self(spec)
    }

    fn describe(&self) -> String {
        "closure".to_string()
    }
}

//! Hyper-parameter search: exhaustive grid evaluation and a policy-gradient
//! search over the same space, both with per-trial GPU-hour accounting.

mod grid;
mod reinforce;
mod space;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use grid::grid_search;
pub use reinforce::{
    policy_mode_hyperparams, reinforce_search, softmax, PolicyAxis, PolicyState, RlConfig,
    POLICY_NOTE,
};
pub use space::{enumerate_grid, LrAxis, ProbAxis, SearchSpace, DEFAULT_GRID_SHIFT_PROB};

use crate::error::{Error, Result};
use crate::proxynet::UNetSpec;
use crate::seed::derive_seed;
use crate::trainer::{CostModel, Evaluator, HyperParams, TrialResult, TrialSpec, TrialStatus};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Training and validation item ids shared by every trial of a search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Vec<String>,
    pub val: Vec<String>,
    #[serde(default)]
    pub manifest: Option<String>,
}

/// Everything a trial needs besides its hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTemplate {
    pub network: UNetSpec,
    pub split: DataSplit,
    pub max_steps: u64,
    pub cost_model: CostModel,
}

/// Builds trial number `index` of a search keyed by `master_seed`.
pub fn make_trial(
    index: usize,
    master_seed: u64,
    hyperparams: HyperParams,
    template: &TrialTemplate,
) -> Result<TrialSpec> {
    let train: HashSet<&str> = template.split.train.iter().map(String::as_str).collect();
    if let Some(dup) = template.split.val.iter().find(|v| train.contains(v.as_str())) {
        return Err(Error::Split(format!(
            "item {dup:?} is in both the training and validation lists"
        )));
    }
    let spec = TrialSpec {
        trial_id: format!("t{index:04}"),
        seed: derive_seed(master_seed, index as u64),
        hyperparams,
        network: template.network,
        train_items: template.split.train.clone(),
        val_items: template.split.val.clone(),
        manifest: template.split.manifest.clone(),
        max_steps: template.max_steps,
        gpu_hours: template.cost_model.for_trial(
            &template.network,
            template.split.train.len(),
            template.max_steps,
        ),
    };
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub trial_id: String,
    pub gpu_hours: f64,
}

/// Per-trial GPU-hour accounting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    entries: Vec<LedgerEntry>,
    total: f64,
}

impl BudgetLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = LedgerEntry>) -> Result<Self> {
        let mut ledger = Self::new();
        for e in entries {
            ledger.record(e.trial_id, e.gpu_hours)?;
        }
        Ok(ledger)
    }

    pub fn record(&mut self, trial_id: impl Into<String>, gpu_hours: f64) -> Result<()> {
        if !(gpu_hours.is_finite() && gpu_hours >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "ledger entries must be non-negative, got {gpu_hours}"
            )));
        }
        self.entries.push(LedgerEntry {
            trial_id: trial_id.into(),
            gpu_hours,
        });
        self.total = self.entries.iter().map(|e| e.gpu_hours).sum();
        Ok(())
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.total
    }
}

/// One evaluated trial: the request echo and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub spec: TrialSpec,
    pub result: TrialResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestTrial {
    pub trial_id: String,
    pub hyperparams: HyperParams,
    pub val_dice: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Grid,
    Rl,
}

/// Everything one search produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub toolkit_version: String,
    pub mode: SearchMode,
    pub evaluator: String,
    pub master_seed: u64,
    pub space: SearchSpace,
    pub template: TrialTemplate,
    pub trials: Vec<TrialRecord>,
    pub best: Option<BestTrial>,
    /// True when at least one trial failed.
    pub partial: bool,
    pub ledger: BudgetLedger,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rl_config: Option<RlConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyState>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SearchReport {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| Error::json("search report", e))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Runs the evaluator, turning errors and out-of-range results into failed
/// trials so a search always completes.
pub(crate) fn evaluate_trial(evaluator: &dyn Evaluator, spec: &TrialSpec) -> TrialResult {
    match evaluator.evaluate(spec) {
        Ok(r) if r.status == TrialStatus::Ok && !(0.0..=1.0).contains(&r.val_dice) => {
            TrialResult::failed(spec, format!("val_dice {} outside [0, 1]", r.val_dice))
        }
        Ok(r) => r,
        Err(e) => TrialResult::failed(spec, e.to_string()),
    }
}

/// Best successful trial; ties keep the earlier trial.
pub(crate) fn best_of(trials: &[TrialRecord]) -> Option<BestTrial> {
    let mut best: Option<&TrialRecord> = None;
    for t in trials.iter().filter(|t| t.result.is_ok()) {
        if best.is_none_or(|b| t.result.val_dice > b.result.val_dice) {
            best = Some(t);
        }
    }
    best.map(|t| BestTrial {
        trial_id: t.spec.trial_id.clone(),
        hyperparams: t.spec.hyperparams,
        val_dice: t.result.val_dice,
    })
}

pub(crate) fn ledger_of(trials: &[TrialRecord]) -> Result<BudgetLedger> {
    BudgetLedger::from_entries(trials.iter().map(|t| LedgerEntry {
        trial_id: t.spec.trial_id.clone(),
        gpu_hours: t.result.gpu_hours,
    }))
}

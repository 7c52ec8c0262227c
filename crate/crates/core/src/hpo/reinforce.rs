//! Factored REINFORCE search.
//!
//! Each search axis (optimizer, learning rate, intensity-shift probability)
//! has its own categorical distribution, a softmax over a logit vector.
//! After every trial the sampled bins are reinforced by
//! `alpha * (reward - baseline) * (onehot - softmax)`, and the baseline
//! tracks the reward with an exponential moving average. Updates are strictly
//! sequential, one per trial.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{
    best_of, evaluate_trial, ledger_of, make_trial, SearchMode, SearchReport, SearchSpace,
    TrialRecord, TrialTemplate, TOOLKIT_VERSION,
};
use crate::error::{Error, Result};
use crate::seed::{self, derive_seed};
use crate::trainer::{Evaluator, HyperParams, Optimizer};

/// Stream index reserved for policy sampling, distinct from trial seeds.
const SAMPLING_STREAM: u64 = u64::MAX;

pub const POLICY_NOTE: &str = "controller: factored REINFORCE policy (independent categorical \
distribution per axis, EMA reward baseline) standing in for a recurrent controller";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlConfig {
    pub n_trials: usize,
    pub alpha: f64,
    pub baseline_decay: f64,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            n_trials: 64,
            alpha: 0.35,
            baseline_decay: 0.8,
        }
    }
}

impl RlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::InvalidInput("n_trials must be at least 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must be non-negative, got {}",
                self.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return Err(Error::InvalidInput(format!(
                "baseline_decay must be in [0, 1), got {}",
                self.baseline_decay
            )));
        }
        Ok(())
    }
}

/// Categorical distribution over one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyAxis {
    pub name: String,
    pub logits: Vec<f64>,
}

impl PolicyAxis {
    pub fn uniform(name: &str, size: usize) -> Self {
        Self {
            name: name.to_string(),
            logits: vec![0.0; size],
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        softmax(&self.logits)
    }

    /// Most probable bin; ties go to the lower index.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, &l) in self.logits.iter().enumerate() {
            if l > self.logits[best] {
                best = i;
            }
        }
        best
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    pub axes: Vec<PolicyAxis>,
    pub baseline: f64,
    pub steps: u64,
}

impl PolicyState {
    pub fn new(axes: Vec<PolicyAxis>) -> Self {
        Self {
            axes,
            baseline: 0.0,
            steps: 0,
        }
    }

    /// Draws one bin per axis.
    pub fn sample(&self, rng: &mut seed::Rng) -> Vec<usize> {
        self.axes
            .iter()
            .map(|axis| {
                let probs = axis.probabilities();
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return i;
                    }
                }
                probs.len() - 1
            })
            .collect()
    }

    /// One REINFORCE step for the bins `sampled` that earned `reward`.
    pub fn update(&mut self, sampled: &[usize], reward: f64, config: &RlConfig) {
        let advantage = reward - self.baseline;
        self.baseline =
            config.baseline_decay * self.baseline + (1.0 - config.baseline_decay) * reward;
        for (axis, &chosen) in self.axes.iter_mut().zip(sampled) {
            let probs = softmax(&axis.logits);
            for (i, (logit, p)) in axis.logits.iter_mut().zip(probs).enumerate() {
                let indicator = if i == chosen { 1.0 } else { 0.0 };
                *logit += config.alpha * advantage * (indicator - p);
            }
        }
        self.steps += 1;
    }

    pub fn modes(&self) -> Vec<usize> {
        self.axes.iter().map(PolicyAxis::mode).collect()
    }
}

/// Materialized categorical choices of a search space.
struct Choices {
    optimizers: Vec<Optimizer>,
    learning_rates: Vec<f64>,
    probs: Vec<f64>,
}

impl Choices {
    fn new(space: &SearchSpace) -> Result<Self> {
        space.validate()?;
        Ok(Self {
            optimizers: space.optimizers.clone(),
            learning_rates: space.learning_rates.values(),
            probs: space.intensity_shift_probs.values(),
        })
    }

    fn policy(&self) -> PolicyState {
        PolicyState::new(vec![
            PolicyAxis::uniform("optimizer", self.optimizers.len()),
            PolicyAxis::uniform("learning_rate", self.learning_rates.len()),
            PolicyAxis::uniform("intensity_shift_prob", self.probs.len()),
        ])
    }

    fn hyperparams(&self, bins: &[usize]) -> HyperParams {
        HyperParams {
            optimizer: self.optimizers[bins[0]],
            learning_rate: self.learning_rates[bins[1]],
            intensity_shift_prob: self.probs[bins[2]],
        }
    }
}

/// Sequential policy-gradient search. Failed trials earn reward 0.
///
/// The report carries the final policy, whose per-axis modes are also
/// summarized in `notes`, and the best trial observed.
pub fn reinforce_search(
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    template: &TrialTemplate,
    config: &RlConfig,
    master_seed: u64,
) -> Result<SearchReport> {
    config.validate()?;
    let choices = Choices::new(space)?;
    let mut policy = choices.policy();
    let mut rng = seed::rng(derive_seed(master_seed, SAMPLING_STREAM));
    let mut trials: Vec<TrialRecord> = Vec::with_capacity(config.n_trials);

    for index in 0..config.n_trials {
        let bins = policy.sample(&mut rng);
        let spec = make_trial(index, master_seed, choices.hyperparams(&bins), template)?;
        let result = evaluate_trial(evaluator, &spec);
        let reward = if result.is_ok() { result.val_dice } else { 0.0 };
        policy.update(&bins, reward, config);
        trials.push(TrialRecord { spec, result });
    }

    let mode = choices.hyperparams(&policy.modes());
    Ok(SearchReport {
        toolkit_version: TOOLKIT_VERSION.to_string(),
        mode: SearchMode::Rl,
        evaluator: evaluator.describe(),
        master_seed,
        space: space.clone(),
        template: template.clone(),
        best: best_of(&trials),
        partial: trials.iter().any(|t| !t.result.is_ok()),
        ledger: ledger_of(&trials)?,
        trials,
        rl_config: Some(*config),
        policy: Some(policy),
        notes: vec![
            POLICY_NOTE.to_string(),
            format!(
                "policy mode: optimizer={} learning_rate={} intensity_shift_prob={}",
                mode.optimizer, mode.learning_rate, mode.intensity_shift_prob
            ),
        ],
    })
}

/// Hyper-parameters at the per-axis modes of a policy-mode report.
pub fn policy_mode_hyperparams(report: &SearchReport) -> Option<HyperParams> {
    let policy = report.policy.as_ref()?;
    let choices = Choices::new(&report.space).ok()?;
    Some(choices.hyperparams(&policy.modes()))
}

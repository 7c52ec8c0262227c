//! Closed-form stand-in for training, used to exercise search orchestration
//! and proxy-fidelity trends without GPUs.
//!
//! ```text
//! dice = A(opt) * exp(-(ln lr - ln mu(opt))^2 / (2 s^2)) * n/(n+3)
//!        * c/(c+0.05) * (1 - 0.15 (p - 0.4)^2) + noise,   s = ln(10)/2
//! ```
//! clamped to `[0, 1]`, where `n` is the number of training items, `c` the
//! parameter count relative to the default full network and `p` the
//! intensity-shift probability. The constants are arbitrary but fixed.

use rand_distr::{Distribution, Normal};

use super::{Evaluator, Optimizer, TrialResult, TrialSpec, TrialStatus};
use crate::error::{Error, Result};
use crate::proxynet::{capacity_ratio, full_spec};
use crate::seed;

/// Width of the learning-rate bump in natural-log units.
pub fn lr_bump_sigma() -> f64 {
    std::f64::consts::LN_10 / 2.0
}

/// Peak Dice reachable with each optimizer.
pub fn optimizer_amplitude(opt: Optimizer) -> f64 {
    match opt {
        Optimizer::Adam => 0.95,
        Optimizer::Adamax => 0.94,
        Optimizer::Rmsprop => 0.92,
        Optimizer::Novograd => 0.90,
    }
}

/// Learning rate at which each optimizer peaks.
pub fn optimal_learning_rate(opt: Optimizer) -> f64 {
    match opt {
        Optimizer::Adam => 4e-4,
        Optimizer::Adamax => 6e-4,
        Optimizer::Rmsprop => 1e-4,
        Optimizer::Novograd => 1e-3,
    }
}

/// Noise-free surrogate Dice before clamping.
pub fn surrogate_mean_dice(spec: &TrialSpec) -> f64 {
    let hp = &spec.hyperparams;
    let sigma = lr_bump_sigma();
    let dlog = hp.learning_rate.ln() - optimal_learning_rate(hp.optimizer).ln();
    let bump = (-(dlog * dlog) / (2.0 * sigma * sigma)).exp();
    let n = spec.train_items.len() as f64;
    let data = n / (n + 3.0);
    let c = capacity_ratio(&spec.network, &full_spec());
    let capacity = c / (c + 0.05);
    let dp = hp.intensity_shift_prob - 0.4;
    let augmentation = 1.0 - 0.15 * dp * dp;
    optimizer_amplitude(hp.optimizer) * bump * data * capacity * augmentation
}

/// Evaluates the surrogate; the noise draw is seeded by the trial seed.
pub fn surrogate_evaluate(spec: &TrialSpec, noise_sigma: f64) -> Result<TrialResult> {
    spec.validate()?;
    let noise = if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma)
            .map_err(|e| Error::InvalidInput(format!("noise sigma {noise_sigma}: {e}")))?;
        normal.sample(&mut seed::rng(spec.seed))
    } else if noise_sigma == 0.0 {
        0.0
    } else {
        return Err(Error::InvalidInput(format!(
            "noise sigma must be non-negative, got {noise_sigma}"
        )));
    };
    Ok(TrialResult {
        trial_id: spec.trial_id.clone(),
        val_dice: (surrogate_mean_dice(spec) + noise).clamp(0.0, 1.0),
        test_dice: None,
        wall_seconds: 0.0,
        gpu_hours: spec.gpu_hours,
        status: TrialStatus::Ok,
        message: None,
    })
}

/// Surrogate trainer with a fixed noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Surrogate {
    pub noise_sigma: f64,
}

impl Evaluator for Surrogate {
    fn evaluate(&self, spec: &TrialSpec) -> Result<TrialResult> {
        surrogate_evaluate(spec, self.noise_sigma)
    }

    fn describe(&self) -> String {
        format!("surrogate(noise_sigma={})", self.noise_sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proxynet::{proxy_schedule, UNetSpec};
    use crate::trainer::HyperParams;

    fn spec(opt: Optimizer, lr: f64, p: f64, n: usize, network: UNetSpec) -> TrialSpec {
        TrialSpec {
            trial_id: "t0000".into(),
            seed: 9,
            hyperparams: HyperParams {
                optimizer: opt,
                learning_rate: lr,
                intensity_shift_prob: p,
            },
            network,
            train_items: (0..n).map(|i| format!("tr{i}")).collect(),
            val_items: vec!["v".into()],
            manifest: None,
            max_steps: 1,
            gpu_hours: 0.5,
        }
    }

    #[test]
    fn peak_value() {
        let r = surrogate_evaluate(&spec(Optimizer::Adam, 4e-4, 0.4, 32, full_spec()), 0.0).unwrap();
        let expected = 0.95 * (32.0 / 35.0) * (1.0 / 1.05);
        assert!((r.val_dice - expected).abs() < 1e-12);
        assert!((r.val_dice - 0.8271).abs() < 2e-4);
        assert_eq!(r.gpu_hours, 0.5);
    }

    #[test]
    fn one_decade_off() {
        let r = surrogate_evaluate(&spec(Optimizer::Adam, 4e-3, 0.4, 32, full_spec()), 0.0).unwrap();
        let expected = 0.95 * (-2.0f64).exp() * (32.0 / 35.0) * (1.0 / 1.05);
        assert!((r.val_dice - expected).abs() < 1e-12);
        assert!((r.val_dice - 0.1119).abs() < 2e-4);
    }

    #[test]
    fn deterministic_with_noise() {
        let s = spec(Optimizer::Rmsprop, 2e-4, 0.1, 8, full_spec());
        assert_eq!(surrogate_evaluate(&s, 0.05).unwrap(), surrogate_evaluate(&s, 0.05).unwrap());
    }

    #[test]
    fn monotone_in_data_and_capacity() {
        let mut prev = 0.0;
        for n in 1..40 {
            let d = surrogate_mean_dice(&spec(Optimizer::Adam, 1e-3, 0.3, n, full_spec()));
            assert!(d >= prev);
            prev = d;
        }
        let mut nets = proxy_schedule(&full_spec()).unwrap();
        nets.reverse();
        nets.push(full_spec());
        let dice: Vec<f64> = nets
            .iter()
            .map(|&net| surrogate_mean_dice(&spec(Optimizer::Adam, 1e-3, 0.3, 8, net)))
            .collect();
        assert!(dice.windows(2).all(|w| w[0] <= w[1]), "{dice:?}");
    }

    #[test]
    fn argmax_learning_rate_is_optimum() {
        for opt in Optimizer::ALL {
            let grid: Vec<f64> = (0..=6000).map(|k| 10f64.powf(-6.0 + k as f64 * 1e-3)).collect();
            let best = grid
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    let da = surrogate_mean_dice(&spec(opt, a, 0.4, 16, full_spec()));
                    let db = surrogate_mean_dice(&spec(opt, b, 0.4, 16, full_spec()));
                    da.total_cmp(&db)
                })
                .unwrap();
            let mu = optimal_learning_rate(opt);
            assert!((best.log10() - mu.log10()).abs() <= 1e-3, "{opt}: {best} vs {mu}");
        }
    }

    #[test]
    fn negative_noise_rejected() {
        let s = spec(Optimizer::Adam, 1e-3, 0.3, 4, full_spec());
        assert!(surrogate_evaluate(&s, -0.1).is_err());
    }
}

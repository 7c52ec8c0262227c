//! Fidelity and efficiency analytics over finished searches.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hpo::{policy_mode_hyperparams, BudgetLedger, SearchMode, SearchReport, SearchSpace};
use crate::trainer::HyperParams;

pub const DISTANCE_DEFINITION: &str = "sqrt(((log10 lr_a - log10 lr_b) / (log10 lr_max - \
log10 lr_min))^2 + (p_a - p_b)^2), optimizer excluded";

/// Sample Pearson correlation. Constant inputs have no defined correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "pearson needs equal lengths, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least 2 pairs, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("an input is constant".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Conventional label for a correlation magnitude.
pub fn correlation_strength(r: f64) -> &'static str {
    match r.abs() {
        a if a >= 0.5 => "high",
        a if a >= 0.3 => "moderate",
        _ => "low",
    }
}

/// Normalized distance between two settings in the (log10 lr, p) plane.
pub fn relative_hp_distance(a: &HyperParams, b: &HyperParams, space: &SearchSpace) -> Result<f64> {
    let (lo, hi) = space.learning_rates.bounds();
    for lr in [a.learning_rate, b.learning_rate] {
        if !(lr >= lo && lr <= hi) {
            return Err(Error::Range(format!(
                "learning rate {lr} is outside the search range [{lo}, {hi}]"
            )));
        }
    }
    let span = hi.log10() - lo.log10();
    let dlr = if span > 0.0 {
        (a.learning_rate.log10() - b.learning_rate.log10()) / span
    } else {
        0.0
    };
    let dp = a.intensity_shift_prob - b.intensity_shift_prob;
    Ok((dlr * dlr + dp * dp).sqrt())
}

/// How many times cheaper `candidate` was than `reference`.
pub fn speedup(reference: &BudgetLedger, candidate: &BudgetLedger) -> Result<f64> {
    if candidate.total() <= 0.0 {
        return Err(Error::Division(
            "candidate ledger has zero GPU hours".into(),
        ));
    }
    Ok(reference.total() / candidate.total())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub config_id: String,
    pub hyperparams: HyperParams,
    pub proxy_dice: f64,
    pub full_dice: f64,
}

/// Proxy and full outcomes of the same configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRuns {
    pub rows: Vec<PairedRow>,
}

impl PairedRuns {
    pub fn proxy(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.proxy_dice).collect()
    }

    pub fn full(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.full_dice).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,optimizer,lr,p,proxy_dice,full_dice\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.config_id,
                r.hyperparams.optimizer,
                r.hyperparams.learning_rate,
                r.hyperparams.intensity_shift_prob,
                r.proxy_dice,
                r.full_dice
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub pairs: PairedRuns,
    pub r: f64,
    /// Configurations dropped because a trial failed in either search.
    pub dropped: Vec<String>,
}

/// Pairs two searches over the same enumeration and correlates their Dice.
pub fn correlation_report(proxy: &SearchReport, full: &SearchReport) -> Result<CorrelationReport> {
    if proxy.trials.len() != full.trials.len() {
        return Err(Error::Alignment(format!(
            "{} proxy trials vs {} full trials",
            proxy.trials.len(),
            full.trials.len()
        )));
    }
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for (p, f) in proxy.trials.iter().zip(&full.trials) {
        if p.spec.trial_id != f.spec.trial_id || p.spec.hyperparams != f.spec.hyperparams {
            return Err(Error::Alignment(format!(
                "proxy {} {:?} does not match full {} {:?}",
                p.spec.trial_id, p.spec.hyperparams, f.spec.trial_id, f.spec.hyperparams
            )));
        }
        if p.result.is_ok() && f.result.is_ok() {
            rows.push(PairedRow {
                config_id: p.spec.trial_id.clone(),
                hyperparams: p.spec.hyperparams,
                proxy_dice: p.result.val_dice,
                full_dice: f.result.val_dice,
            });
        } else {
            dropped.push(p.spec.trial_id.clone());
        }
    }
    let pairs = PairedRuns { rows };
    let r = pearson(&pairs.proxy(), &pairs.full())?;
    Ok(CorrelationReport { pairs, r, dropped })
}

/// The setting a search settles on: the policy mode for policy-gradient
/// searches, the best trial otherwise.
pub fn estimated_hyperparams(report: &SearchReport) -> Option<HyperParams> {
    match report.mode {
        SearchMode::Rl => policy_mode_hyperparams(report),
        SearchMode::Grid => report.best.as_ref().map(|b| b.hyperparams),
    }
}

/// Plot-ready summary of a proxy search against its full counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelitySummary {
    pub r: Option<f64>,
    pub n_pairs: usize,
    pub strength: Option<String>,
    pub distance: Option<f64>,
    pub distance_definition: String,
    pub speedup: Option<f64>,
    pub proxy_gpu_hours: f64,
    pub full_gpu_hours: f64,
}

/// Correlation (when both searches cover the same enumeration), distance
/// between the estimated settings, and GPU-hour speedup.
pub fn summarize(proxy: &SearchReport, full: &SearchReport) -> Result<(FidelitySummary, Option<PairedRuns>)> {
    let correlation = if proxy.mode == SearchMode::Grid && full.mode == SearchMode::Grid {
        Some(correlation_report(proxy, full)?)
    } else {
        None
    };
    let distance = match (estimated_hyperparams(proxy), estimated_hyperparams(full)) {
        (Some(a), Some(b)) => Some(relative_hp_distance(&a, &b, &full.space)?),
        _ => None,
    };
    let speedup = speedup(&full.ledger, &proxy.ledger).ok();
    let summary = FidelitySummary {
        r: correlation.as_ref().map(|c| c.r),
        n_pairs: correlation.as_ref().map_or(0, |c| c.pairs.rows.len()),
        strength: correlation
            .as_ref()
            .map(|c| correlation_strength(c.r).to_string()),
        distance,
        distance_definition: DISTANCE_DEFINITION.to_string(),
        speedup,
        proxy_gpu_hours: proxy.ledger.total(),
        full_gpu_hours: full.ledger.total(),
    };
    Ok((summary, correlation.map(|c| c.pairs)))
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trainer::{HyperParams, Optimizer};

/// Learning-rate axis: an explicit set, or log-spaced bins over a range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum LrAxis {
    Set { values: Vec<f64> },
    LogRange { min: f64, max: f64, bins: usize },
}

/// Intensity-shift probability axis: an explicit set, or evenly spaced
/// points (endpoints included) over a sub-range of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ProbAxis {
    Set { values: Vec<f64> },
    Range { min: f64, max: f64, bins: usize },
}

impl LrAxis {
    /// Candidate values; range bins map to their log-space centre.
    pub fn values(&self) -> Vec<f64> {
        match self {
            LrAxis::Set { values } => values.clone(),
            LrAxis::LogRange { min, max, bins } => {
                let (lo, hi) = (min.log10(), max.log10());
                let width = (hi - lo) / *bins as f64;
                (0..*bins)
                    .map(|k| 10f64.powf(lo + (k as f64 + 0.5) * width))
                    .collect()
            }
        }
    }

    /// Span used to normalize learning-rate distances.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            LrAxis::Set { values } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                }),
            LrAxis::LogRange { min, max, .. } => (*min, *max),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            LrAxis::Set { values } => {
                if values.is_empty() {
                    return Err(Error::InvalidInput("learning-rate set is empty".into()));
                }
                if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    return Err(Error::InvalidInput(format!(
                        "learning rate {v} must be positive"
                    )));
                }
                check_distinct(values, "learning-rate")
            }
            LrAxis::LogRange { min, max, bins } => {
                if !(min.is_finite() && max.is_finite() && *min > 0.0 && min < max) {
                    return Err(Error::InvalidInput(format!(
                        "learning-rate range [{min}, {max}] must satisfy 0 < min < max"
                    )));
                }
                if *bins == 0 {
                    return Err(Error::InvalidInput("learning-rate bins must be positive".into()));
                }
                Ok(())
            }
        }
    }
}

impl ProbAxis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            ProbAxis::Set { values } => values.clone(),
            ProbAxis::Range { min, max, bins } => {
                if *bins == 1 {
                    return vec![*min];
                }
                let step = (max - min) / (*bins - 1) as f64;
                (0..*bins)
                    .map(|k| if k + 1 == *bins { *max } else { min + k as f64 * step })
                    .collect()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        match self {
            ProbAxis::Set { values } => {
                if values.is_empty() {
                    return Err(Error::InvalidInput("probability set is empty".into()));
                }
                if let Some(v) = values.iter().find(|v| !in_unit(**v)) {
                    return Err(Error::InvalidInput(format!("probability {v} is outside [0, 1]")));
                }
                check_distinct(values, "probability")
            }
            ProbAxis::Range { min, max, bins } => {
                if !(in_unit(*min) && in_unit(*max) && min <= max) || *bins == 0 {
                    return Err(Error::InvalidInput(format!(
                        "probability range [{min}, {max}] with {bins} bins is invalid"
                    )));
                }
                Ok(())
            }
        }
    }
}

fn check_distinct(values: &[f64], what: &str) -> Result<()> {
    for (i, a) in values.iter().enumerate() {
        if values[..i].contains(a) {
            return Err(Error::InvalidInput(format!("{what} value {a} is repeated")));
        }
    }
    Ok(())
}

/// The hyper-parameter space searched over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub optimizers: Vec<Optimizer>,
    pub learning_rates: LrAxis,
    pub intensity_shift_probs: ProbAxis,
}

/// Intensity-shift probability held fixed in the default grid.
pub const DEFAULT_GRID_SHIFT_PROB: f64 = 0.4;

impl SearchSpace {
    /// Four optimizers by four learning rates, augmentation held fixed.
    pub fn default_grid() -> Self {
        Self {
            optimizers: Optimizer::ALL.to_vec(),
            learning_rates: LrAxis::Set {
                values: vec![0.001, 0.0006, 0.0004, 0.0001],
            },
            intensity_shift_probs: ProbAxis::Set {
                values: vec![DEFAULT_GRID_SHIFT_PROB],
            },
        }
    }

    /// Range-mode space for the policy-gradient search: 16 log bins over
    /// `[1e-5, 1e-2]` and 11 probabilities over `[0, 1]`.
    pub fn default_rl() -> Self {
        Self {
            optimizers: Optimizer::ALL.to_vec(),
            learning_rates: LrAxis::LogRange {
                min: 1e-5,
                max: 1e-2,
                bins: 16,
            },
            intensity_shift_probs: ProbAxis::Range {
                min: 0.0,
                max: 1.0,
                bins: 11,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.optimizers.is_empty() {
            return Err(Error::InvalidInput("optimizer set is empty".into()));
        }
        for (i, o) in self.optimizers.iter().enumerate() {
            if self.optimizers[..i].contains(o) {
                return Err(Error::InvalidInput(format!("optimizer {o} is repeated")));
            }
        }
        self.learning_rates.validate()?;
        self.intensity_shift_probs.validate()
    }
}

/// Cartesian product of set-mode axes: optimizer-major, then learning rate
/// descending, then probability ascending.
pub fn enumerate_grid(space: &SearchSpace) -> Result<Vec<HyperParams>> {
    space.validate()?;
    let LrAxis::Set { values: lrs } = &space.learning_rates else {
        return Err(Error::Mode(
            "grid search needs an explicit learning-rate set, not a range".into(),
        ));
    };
    let ProbAxis::Set { values: probs } = &space.intensity_shift_probs else {
        return Err(Error::Mode(
            "grid search needs an explicit probability set, not a range".into(),
        ));
    };
    let mut lrs = lrs.clone();
    lrs.sort_by(|a, b| b.total_cmp(a));
    let mut probs = probs.clone();
    probs.sort_by(f64::total_cmp);

    let mut grid = Vec::with_capacity(space.optimizers.len() * lrs.len() * probs.len());
    for &optimizer in &space.optimizers {
        for &learning_rate in &lrs {
            for &intensity_shift_prob in &probs {
                grid.push(HyperParams {
                    optimizer,
                    learning_rate,
                    intensity_shift_prob,
                });
            }
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_sixteen_points() {
        let g = enumerate_grid(&SearchSpace::default_grid()).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g[0].optimizer, Optimizer::Adam);
        assert_eq!(g[0].learning_rate, 0.001);
        assert_eq!(g[3].learning_rate, 0.0001);
        assert_eq!(g[4].optimizer, Optimizer::Rmsprop);
        assert_eq!(g, enumerate_grid(&SearchSpace::default_grid()).unwrap());
    }

    #[test]
    fn order_is_lr_descending_then_p_ascending() {
        let space = SearchSpace {
            optimizers: vec![Optimizer::Novograd],
            learning_rates: LrAxis::Set {
                values: vec![1e-4, 1e-2],
            },
            intensity_shift_probs: ProbAxis::Set {
                values: vec![0.9, 0.1],
            },
        };
        let g: Vec<(f64, f64)> = enumerate_grid(&space)
            .unwrap()
            .iter()
            .map(|h| (h.learning_rate, h.intensity_shift_prob))
            .collect();
        assert_eq!(g, vec![(1e-2, 0.1), (1e-2, 0.9), (1e-4, 0.1), (1e-4, 0.9)]);
    }

    #[test]
    fn single_point() {
        let space = SearchSpace {
            optimizers: vec![Optimizer::Adam],
            learning_rates: LrAxis::Set { values: vec![1e-3] },
            intensity_shift_probs: ProbAxis::Set { values: vec![0.0] },
        };
        assert_eq!(enumerate_grid(&space).unwrap().len(), 1);
    }

    #[test]
    fn range_axes_rejected_in_grid_mode() {
        assert!(matches!(
            enumerate_grid(&SearchSpace::default_rl()),
            Err(Error::Mode(_))
        ));
    }

    #[test]
    fn range_values() {
        let lr = LrAxis::LogRange {
            min: 1e-5,
            max: 1e-2,
            bins: 16,
        };
        let v = lr.values();
        assert_eq!(v.len(), 16);
        let w = 3.0 / 16.0;
        assert!((v[0].log10() - (-5.0 + w / 2.0)).abs() < 1e-12);
        assert!(v.windows(2).all(|p| p[0] < p[1]));
        let p = ProbAxis::Range {
            min: 0.0,
            max: 1.0,
            bins: 11,
        }
        .values();
        assert_eq!(p.len(), 11);
        assert_eq!((p[0], p[10]), (0.0, 1.0));
        assert!((p[4] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn invalid_axes() {
        let mut s = SearchSpace::default_grid();
        s.learning_rates = LrAxis::Set { values: vec![] };
        assert!(s.validate().is_err());
        let mut s = SearchSpace::default_grid();
        s.learning_rates = LrAxis::Set { values: vec![-1.0] };
        assert!(s.validate().is_err());
        let mut s = SearchSpace::default_grid();
        s.optimizers.clear();
        assert!(s.validate().is_err());
        let mut s = SearchSpace::default_grid();
        s.intensity_shift_probs = ProbAxis::Set { values: vec![1.2] };
        assert!(s.validate().is_err());
    }
}

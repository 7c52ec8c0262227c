use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub budget: usize,
    pub seed: u64,
}

fn check_budget(budget: usize, available: usize) -> Result<()> {
    if budget == 0 || budget > available {
        return Err(Error::Budget { budget, available });
    }
    Ok(())
}

/// Indices of the `budget` lowest scores, ascending. Equal scores favour the
/// lower index.
pub fn select_proxy(scores: &[f64], budget: usize) -> Result<Vec<usize>> {
    check_budget(budget, scores.len())?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(i.cmp(&j)));
    let mut chosen = order[..budget].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Uniform sample of `budget` of `n` indices without replacement, ascending.
pub fn select_random(n: usize, budget: usize, seed: u64) -> Result<Vec<usize>> {
    check_budget(budget, n)?;
    let mut rng = seed::rng(seed);
    let mut chosen = index::sample(&mut rng, n, budget).into_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Seeded shuffle, then the first `ceil(k / 2)` go to training and the rest
/// to validation.
pub fn split_fifty_fifty(indices: &[usize], seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if indices.len() < 2 {
        return Err(Error::Split(format!(
            "need at least 2 items to split, got {}",
            indices.len()
        )));
    }
    let mut shuffled = indices.to_vec();
    shuffled.shuffle(&mut seed::rng(seed));
    let n_train = indices.len().div_ceil(2);
    let val = shuffled.split_off(n_train);
    Ok((shuffled, val))
}

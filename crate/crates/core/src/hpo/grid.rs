use rayon::prelude::*;

use super::{
    best_of, enumerate_grid, evaluate_trial, ledger_of, make_trial, SearchMode, SearchReport,
    SearchSpace, TrialRecord, TrialTemplate, TOOLKIT_VERSION,
};
use crate::error::{Error, Result};
use crate::trainer::{Evaluator, TrialSpec};

/// Evaluates every grid point once, up to `workers` at a time.
///
/// Trials are recorded in enumeration order whatever order they finish in,
/// so the report does not depend on `workers`. Evaluator failures become
/// failed trials and flag the report as partial.
pub fn grid_search(
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    template: &TrialTemplate,
    workers: usize,
    master_seed: u64,
) -> Result<SearchReport> {
    let grid = enumerate_grid(space)?;
    let specs = grid
        .into_iter()
        .enumerate()
        .map(|(i, hp)| make_trial(i, master_seed, hp, template))
        .collect::<Result<Vec<TrialSpec>>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start {workers} workers: {e}")))?;
    let trials: Vec<TrialRecord> = pool.install(|| {
        specs
            .into_par_iter()
            .map(|spec| {
                let result = evaluate_trial(evaluator, &spec);
                TrialRecord { spec, result }
            })
            .collect()
    });

    Ok(SearchReport {
        toolkit_version: TOOLKIT_VERSION.to_string(),
        mode: SearchMode::Grid,
        evaluator: evaluator.describe(),
        master_seed,
        space: space.clone(),
        template: template.clone(),
        best: best_of(&trials),
        partial: trials.iter().any(|t| !t.result.is_ok()),
        ledger: ledger_of(&trials)?,
        trials,
        rl_config: None,
        policy: None,
        notes: Vec::new(),
    })
}

//! Rayon versions of the grid search. Candidates are evaluated in parallel
//! but collected in index order, so the selected control (first maximum)
//! matches the sequential search exactly.

use pbcs_core::search::{gas_verdict, select_best, GasVerdict, GridSpace, SearchResult, DEFAULT_EVAL_BUDGET};
use pbcs_core::{Error, PBCSystem, Result};
use rayon::prelude::*;

pub const BUDGET_ENV: &str = "PBCS_EVAL_BUDGET";

/// Evaluation budget from `PBCS_EVAL_BUDGET`, else the library default.
pub fn eval_budget() -> std::result::Result<u64, crate::CliError> {
    match std::env::var(BUDGET_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| crate::CliError::Usage(format!("{BUDGET_ENV} must be a non-negative integer, got {s:?}"))),
        Err(_) => Ok(DEFAULT_EVAL_BUDGET),
    }
}

pub fn par_grid_search(sys: &PBCSystem, arcs: usize, density: u32, budget: u64) -> Result<SearchResult> {
    sys.require_valid()?;
    let space = GridSpace::new(arcs, density)?;
    space.check_budget(budget)?;
    let rhos = (0..space.len())
        .into_par_iter()
        .map(|i| space.evaluate(sys, i))
        .collect::<Result<Vec<_>>>()?;
    select_best(&space, sys, &rhos)
}

/// Grid search at each horizon; `budget` applies to each search.
pub fn par_rho_t_curve(
    sys: &PBCSystem,
    horizons: &[f64],
    arcs: usize,
    density: u32,
    budget: u64,
) -> Result<(Vec<(f64, SearchResult)>, GasVerdict)> {
    if horizons.is_empty() {
        return Err(Error::InvalidArgument("rho_t curve needs at least one horizon"));
    }
    GridSpace::new(arcs, density)?.check_budget(budget)?;
    let results = horizons
        .iter()
        .map(|&t| Ok((t, par_grid_search(&sys.with_horizon(t)?, arcs, density, budget)?)))
        .collect::<Result<Vec<_>>>()?;
    let verdict = gas_verdict(&results);
    Ok((results, verdict))
}

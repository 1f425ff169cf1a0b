//! The four subcommands. Each returns the text for standard output; the
//! binary maps errors to exit codes with [`CliError::exit_code`].

use std::path::{Path, PathBuf};

use pbcs_core::first_order::{check_first_order, default_grid, uniform_grid, MPReport, DEFAULT_SIGN_TOL};
use pbcs_core::high_order::{build_h, second_order_test, singular_test, SecondOrderResult, SingularTestResult, SECOND_ORDER_TOL};
use pbcs_core::search::{gas_verdict, refine, GasVerdict, RefineSchedule, SearchResult};
use pbcs_core::{BangBangControl, Control, PBCSystem, PerronPair, ValidationReport};
use serde::Serialize;

use crate::input::{read_problem, Problem};
use crate::output::{to_json, write_curve_csv, write_switching_csv};
use crate::parallel::{eval_budget, par_grid_search};
use crate::reference::{render_table, Example};
use crate::{exit, CliError};

#[derive(Debug, Serialize)]
pub struct ValidateOutput {
    pub valid: bool,
    #[serde(flatten)]
    pub report: ValidationReport,
}

/// Validity report and exit code: 0 valid, 2 invalid.
pub fn validate(path: &Path) -> Result<(String, i32), CliError> {
    let Problem { system, .. } = read_problem(path)?;
    let report = system.validate();
    let valid = report.is_valid();
    let code = if valid { exit::OK } else { exit::INVALID_SYSTEM };
    Ok((to_json(&ValidateOutput { valid, report })?, code))
}

/// Second-order data of a bang-bang control.
///
/// For an odd number of arcs the first and last arcs have the same sign, so
/// `t = 0` is not a switch of the periodic control; the control is rotated
/// by one arc (merging those two) so that the analysis starts at a switch.
#[derive(Debug, Serialize)]
pub struct SecondOrderSection {
    pub analyzed_control: BangBangControl,
    pub shift: usize,
    pub arcs: usize,
    #[serde(flatten)]
    pub result: SecondOrderResult,
}

#[derive(Debug, Serialize)]
pub struct AnalysisBundle {
    pub system: PBCSystem,
    pub control: Control,
    pub perron: PerronPair,
    pub first_order: MPReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singular: Option<SingularTestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_order: Option<SecondOrderSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

fn anchored_at_switch(u: &BangBangControl) -> Result<(BangBangControl, usize), CliError> {
    let k = u.arc_count();
    if k >= 3 && k % 2 == 1 {
        Ok((u.cyclic_shift(1)?, 1))
    } else {
        Ok((u.clone(), 0))
    }
}

pub fn analyze_bundle(path: &Path, samples: Option<usize>, csv: Option<&Path>) -> Result<AnalysisBundle, CliError> {
    let Problem { system, control } = read_problem(path)?;
    let control = control.ok_or_else(|| CliError::Usage(format!("{} has no control to analyze", path.display())))?;
    system.require_valid()?;

    let grid = match samples {
        Some(n) if n < 2 => return Err(CliError::Usage("--grid needs at least 2 samples".into())),
        Some(n) => uniform_grid(system.horizon(), n, &control.switch_times()),
        None => default_grid(&control),
    };
    let first_order = check_first_order(&system, &control, &grid, DEFAULT_SIGN_TOL)?;

    let singular = if control.is_identically_zero() {
        Some(singular_test(&system)?)
    } else {
        None
    };

    let second_order = match control.as_bang_bang() {
        Some(u) => {
            let (analyzed, shift) = anchored_at_switch(&u)?;
            if analyzed.arc_count() >= 2 {
                let d = build_h(&system, &analyzed)?;
                Some(SecondOrderSection {
                    arcs: analyzed.arc_count(),
                    analyzed_control: analyzed,
                    shift,
                    result: second_order_test(&d, SECOND_ORDER_TOL)?,
                })
            } else {
                None
            }
        }
        None => None,
    };

    if let Some(p) = csv {
        write_switching_csv(p, &first_order.switching)?;
    }
    Ok(AnalysisBundle {
        perron: first_order.perron.clone(),
        system,
        control,
        first_order,
        singular,
        second_order,
        csv: csv.map(|p| p.display().to_string()),
    })
}

pub fn analyze(path: &Path, samples: Option<usize>, csv: Option<&Path>) -> Result<String, CliError> {
    to_json(&analyze_bundle(path, samples, csv)?)
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub arcs: usize,
    pub density: u32,
    pub horizons: Vec<f64>,
    pub refine: bool,
    pub curve_csv: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct SearchOutput {
    pub horizon: f64,
    pub arcs: usize,
    pub density: u32,
    pub search: SearchResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined: Option<SearchResult>,
    pub gas: GasVerdict,
}

/// Grid search at the file's horizon, optional refinement, and the GAS
/// verdict over that horizon plus any in `opts.horizons`.
pub fn search_output(path: &Path, opts: &SearchOptions) -> Result<SearchOutput, CliError> {
    let Problem { system, .. } = read_problem(path)?;
    system.require_valid()?;
    if let Some(h) = opts.horizons.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
        return Err(CliError::Usage(format!("horizon {h} is not positive")));
    }
    let budget = eval_budget()?;
    let t = system.horizon();
    let search = par_grid_search(&system, opts.arcs, opts.density, budget)?;

    let mut horizons = opts.horizons.clone();
    horizons.push(t);
    horizons.sort_by(f64::total_cmp);
    horizons.dedup();
    let results = horizons
        .iter()
        .map(|&h| {
            let r = if h == t {
                search.clone()
            } else {
                par_grid_search(&system.with_horizon(h)?, opts.arcs, opts.density, budget)?
            };
            Ok((h, r))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let gas = gas_verdict(&results);

    let refined = if opts.refine {
        Some(refine(&system, &search.best_control, &RefineSchedule::default())?)
    } else {
        None
    };
    if let Some(p) = &opts.curve_csv {
        write_curve_csv(p, &gas.curve)?;
    }
    Ok(SearchOutput {
        horizon: t,
        arcs: opts.arcs,
        density: opts.density,
        search,
        refined,
        gas,
    })
}

pub fn search(path: &Path, opts: &SearchOptions) -> Result<String, CliError> {
    to_json(&search_output(path, opts)?)
}

/// The pass/fail table, or [`CliError::Mismatch`] after printing it.
pub fn reproduce(example: Example) -> Result<(String, bool), CliError> {
    let checks = example.run()?;
    let ok = checks.iter().all(|c| c.pass);
    Ok((render_table(example, &checks), ok))
}

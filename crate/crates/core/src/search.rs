//! Lower-bound search for spectral-radius-maximizing bang-bang controls.
//!
//! The supremum over all measurable controls is approximated from below by
//! bang-bang controls whose arc durations lie on the simplex grid
//! `tau_i = T n_i / d`, `n_1 + ... + n_k = d`. Zero counts are allowed, so
//! controls with fewer than `k` arcs are included. Nothing here can
//! certify stability; only instability, via a witness with `rho >= 1`.

use alloc::vec;
use alloc::vec::Vec;

use crate::control::{BangBangControl, Control};
use crate::error::{Error, Result};
use crate::math::{exp, ln};
use crate::perron::spectral_radius;
use crate::system::PBCSystem;
use crate::transition::monodromy;

/// Default cap on transition-matrix builds per search.
pub const DEFAULT_EVAL_BUDGET: u64 = 1_000_000;

/// A witness certifies instability when `rho >= 1 + GAS_MARGIN`.
pub const GAS_MARGIN: f64 = 1e-9;

fn binom(n: u64, r: u64) -> u128 {
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.saturating_mul(u128::from(n - i)) / u128::from(i + 1);
    }
    acc
}

/// Number of ways to write `m` as an ordered sum of `parts` nonnegative
/// integers.
fn weak_compositions(m: u64, parts: u64) -> u128 {
    if parts == 0 {
        return u128::from(m == 0);
    }
    binom(m + parts - 1, parts - 1)
}

/// The candidate set of [`grid_search`], addressable by index.
///
/// Index order is ascending lexicographic in `(r, n_1, ..., n_k)`, `r = -1`
/// first; ties in `rho` go to the smallest index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpace {
    arcs: usize,
    density: u32,
    per_sign: u128,
}

impl GridSpace {
    pub fn new(arcs: usize, density: u32) -> Result<Self> {
        if arcs == 0 {
            return Err(Error::InvalidArgument("grid search needs at least one arc"));
        }
        if density < 2 {
            return Err(Error::InvalidArgument("grid density must be at least 2"));
        }
        Ok(Self {
            arcs,
            density,
            per_sign: weak_compositions(u64::from(density), arcs as u64),
        })
    }

    pub fn arcs(&self) -> usize {
        self.arcs
    }

    pub fn density(&self) -> u32 {
        self.density
    }

    /// Number of candidates, saturating at `u64::MAX`.
    pub fn len(&self) -> u64 {
        u64::try_from(self.per_sign.saturating_mul(2)).unwrap_or(u64::MAX)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Fails with [`Error::BudgetExceeded`] if the space is larger than
    /// `budget`.
    pub fn check_budget(&self, budget: u64) -> Result<()> {
        let needed = self.len();
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        Ok(())
    }

    /// First sign and grid counts of candidate `index`.
    pub fn candidate(&self, index: u64) -> Result<(i8, Vec<u32>)> {
        if index >= self.len() {
            return Err(Error::BadIndex {
                index: usize::try_from(index).unwrap_or(usize::MAX),
                len: usize::try_from(self.len()).unwrap_or(usize::MAX),
            });
        }
        let mut rank = u128::from(index);
        let r = if rank < self.per_sign { -1 } else { 1 };
        rank %= self.per_sign;
        let mut counts = vec![0u32; self.arcs];
        let mut remaining = u64::from(self.density);
        for (i, slot) in counts.iter_mut().enumerate() {
            let rest = (self.arcs - i - 1) as u64;
            if rest == 0 {
                *slot = remaining as u32;
                break;
            }
            let mut v = 0;
            loop {
                let block = weak_compositions(remaining - v, rest);
                if rank < block {
                    break;
                }
                rank -= block;
                v += 1;
            }
            *slot = v as u32;
            remaining -= v;
        }
        Ok((r, counts))
    }

    /// The control of candidate `index` on `[0, horizon]`.
    pub fn control(&self, index: u64, horizon: f64) -> Result<BangBangControl> {
        let (r, counts) = self.candidate(index)?;
        let d = f64::from(self.density);
        let pieces: Vec<(i8, f64)> = counts
            .iter()
            .enumerate()
            .map(|(i, n)| (if i % 2 == 0 { r } else { -r }, horizon * f64::from(*n) / d))
            .collect();
        BangBangControl::from_signed_pieces(&pieces, horizon)
    }

    /// `rho(C(T, u))` for candidate `index`.
    pub fn evaluate(&self, sys: &PBCSystem, index: u64) -> Result<f64> {
        control_rho(sys, &self.control(index, sys.horizon())?)
    }
}

/// `rho(C(T, u))`; the root need not be simple.
pub fn control_rho(sys: &PBCSystem, u: &BangBangControl) -> Result<f64> {
    spectral_radius(&monodromy(sys, &Control::from(u.clone()))?)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SearchResult {
    pub best_control: BangBangControl,
    pub best_rho: f64,
    pub evaluations: u64,
    /// `rho` after each accepted step; a single entry for a plain grid search.
    pub trace: Vec<f64>,
}

/// Picks the first maximum of `rhos`, which must be the values of every
/// candidate of `space` in index order.
pub fn select_best(space: &GridSpace, sys: &PBCSystem, rhos: &[f64]) -> Result<SearchResult> {
    if rhos.len() as u64 != space.len() {
        return Err(Error::DimensionMismatch {
            expected: usize::try_from(space.len()).unwrap_or(usize::MAX),
            found: rhos.len(),
        });
    }
    let mut best = 0;
    for (i, rho) in rhos.iter().enumerate() {
        if !rho.is_finite() {
            return Err(Error::NonFinite);
        }
        if *rho > rhos[best] {
            best = i;
        }
    }
    Ok(SearchResult {
        best_control: space.control(best as u64, sys.horizon())?,
        best_rho: rhos[best],
        evaluations: rhos.len() as u64,
        trace: vec![rhos[best]],
    })
}

/// Exhaustive search over [`GridSpace`] at the system horizon.
pub fn grid_search(sys: &PBCSystem, arcs: usize, density: u32, budget: u64) -> Result<SearchResult> {
    sys.require_valid()?;
    let space = GridSpace::new(arcs, density)?;
    space.check_budget(budget)?;
    let rhos = (0..space.len())
        .map(|i| space.evaluate(sys, i))
        .collect::<Result<Vec<_>>>()?;
    select_best(&space, sys, &rhos)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineSchedule {
    /// First step, as a fraction of `T`.
    pub initial_step: f64,
    /// Factor applied to the step when no move improves `rho`.
    pub shrink: f64,
    /// Stop once the step falls below `min_step * T`.
    pub min_step: f64,
    pub max_evaluations: u64,
}

impl Default for RefineSchedule {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            shrink: 0.5,
            min_step: 1e-9,
            max_evaluations: 200_000,
        }
    }
}

/// Coordinate hill-climbing on the switching times of `seed`.
///
/// Every switch is tried at `+-step` and the best strictly improving move
/// is kept; the step shrinks when none improves. Arcs may shrink to zero
/// and disappear. The trace is strictly increasing. This is a local method:
/// a collapsed single-arc control has no switch left to move.
pub fn refine(sys: &PBCSystem, seed: &BangBangControl, schedule: &RefineSchedule) -> Result<SearchResult> {
    sys.require_valid()?;
    if !(schedule.shrink > 0.0 && schedule.shrink < 1.0 && schedule.initial_step > 0.0) {
        return Err(Error::InvalidArgument("refine needs 0 < shrink < 1 and a positive step"));
    }
    let horizon = sys.horizon();
    let mut current = seed.clone();
    let mut rho = control_rho(sys, &current)?;
    let mut evaluations = 1;
    let mut trace = vec![rho];
    let mut step = schedule.initial_step * horizon;

    'outer: while step >= schedule.min_step * horizon {
        let mut best: Option<(f64, BangBangControl)> = None;
        for j in 0..current.arc_count().saturating_sub(1) {
            for dir in [1.0, -1.0] {
                if evaluations >= schedule.max_evaluations {
                    break 'outer;
                }
                let Some(candidate) = shift_switch(&current, j, dir * step)? else {
                    continue;
                };
                let r = control_rho(sys, &candidate)?;
                evaluations += 1;
                if r > best.as_ref().map_or(rho, |b| b.0) {
                    best = Some((r, candidate));
                }
            }
        }
        match best {
            Some((r, candidate)) => {
                rho = r;
                current = candidate;
                trace.push(rho);
            }
            None => step *= schedule.shrink,
        }
    }
    Ok(SearchResult {
        best_control: current,
        best_rho: rho,
        evaluations,
        trace,
    })
}

/// Moves switch `j` (between arcs `j` and `j + 1`) by `delta`, clamped so
/// neither neighbour turns negative. `None` if the move is void.
fn shift_switch(u: &BangBangControl, j: usize, delta: f64) -> Result<Option<BangBangControl>> {
    let mut durations = u.durations();
    let delta = delta.max(-durations[j]).min(durations[j + 1]);
    if delta == 0.0 {
        return Ok(None);
    }
    durations[j] += delta;
    durations[j + 1] -= delta;
    let pieces: Vec<(i8, f64)> = durations
        .iter()
        .enumerate()
        .map(|(i, d)| (u.arc_sign(i), d.max(0.0)))
        .collect();
    let moved = BangBangControl::from_signed_pieces(&pieces, u.horizon())?;
    Ok(if moved == *u { None } else { Some(moved) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum GasStatus {
    #[cfg_attr(feature = "serde", serde(rename = "not_GAS_certified"))]
    NotGasCertified,
    #[cfg_attr(feature = "serde", serde(rename = "undetermined"))]
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CurvePoint {
    pub horizon: f64,
    pub rho: f64,
    /// `rho^(1/t)`
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Witness {
    pub horizon: f64,
    pub control: BangBangControl,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GasVerdict {
    pub status: GasStatus,
    pub witness: Option<Witness>,
    pub curve: Vec<CurvePoint>,
}

/// `rho^(1/t)`
pub fn growth_rate(rho: f64, horizon: f64) -> f64 {
    exp(ln(rho) / horizon)
}

/// Assembles the verdict from per-horizon search results. The witness is
/// the first horizon with the largest rate among those with
/// `rho >= 1 + GAS_MARGIN`.
pub fn gas_verdict(results: &[(f64, SearchResult)]) -> GasVerdict {
    let curve: Vec<CurvePoint> = results
        .iter()
        .map(|(t, r)| CurvePoint {
            horizon: *t,
            rho: r.best_rho,
            rate: growth_rate(r.best_rho, *t),
        })
        .collect();
    let mut witness: Option<(usize, f64)> = None;
    for (i, p) in curve.iter().enumerate() {
        if p.rho >= 1.0 + GAS_MARGIN && witness.is_none_or(|(_, rate)| p.rate > rate) {
            witness = Some((i, p.rate));
        }
    }
    match witness {
        Some((i, _)) => GasVerdict {
            status: GasStatus::NotGasCertified,
            witness: Some(Witness {
                horizon: results[i].0,
                control: results[i].1.best_control.clone(),
                rho: results[i].1.best_rho,
            }),
            curve,
        },
        None => GasVerdict {
            status: GasStatus::Undetermined,
            witness: None,
            curve,
        },
    }
}

/// [`grid_search`] at each horizon, then [`gas_verdict`].
pub fn rho_t_curve(sys: &PBCSystem, horizons: &[f64], arcs: usize, density: u32, budget: u64) -> Result<GasVerdict> {
    if horizons.is_empty() {
        return Err(Error::InvalidArgument("rho_t curve needs at least one horizon"));
    }
    let results = horizons
        .iter()
        .map(|&t| Ok((t, grid_search(&sys.with_horizon(t)?, arcs, density, budget)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(gas_verdict(&results))
}

//! First-order maximum principle for the spectral-radius problem.
//!
//! For a candidate `u` with simple Perron root `rho*` of `C*(T)`, let
//! `p(t) = C(t, 0) v*` and `q(t)' = (w*)' C(T, t)`. An optimal control must
//! satisfy `u(t) = sign(m(t))` almost everywhere, where
//! `m(t) = q(t)' B p(t)`. Both curves are evaluated in closed form from
//! per-arc exponentials, never by ODE stepping, so `q(t)'p(t) = rho*` holds
//! to round-off and `m(0) = m(T)`.

use alloc::vec::Vec;

use crate::control::{BangBangControl, Control};
use crate::error::{Error, Result};
use crate::expm::expm_scaled;
use crate::math::{abs, norm2};
use crate::matrix::dot;
use crate::perron::{perron_pair, PerronPair, DEFAULT_TOL};
use crate::system::PBCSystem;
use crate::transition::ArcFlow;

/// Uniform samples used when no grid is given.
pub const DEFAULT_GRID_SAMPLES: usize = 2048;

/// `m` counts as identically zero when `max |m| <= VACUOUS_THRESHOLD * |B| * rho*`.
pub const VACUOUS_THRESHOLD: f64 = 1e-9;

/// Samples with `|m| <= ZERO_BAND * max|m|` are treated as zeros when
/// locating sign changes.
pub const ZERO_BAND: f64 = 1e-9;

/// Default sign-agreement tolerance for [`check_first_order`], relative to
/// `max |m|`.
pub const DEFAULT_SIGN_TOL: f64 = 1e-6;

/// `samples` uniform points on `[0, T]` merged with `extra`, sorted, with
/// near-duplicates removed.
pub fn uniform_grid(horizon: f64, samples: usize, extra: &[f64]) -> Vec<f64> {
    let samples = samples.max(2);
    let mut g: Vec<f64> = (0..samples)
        .map(|i| horizon * i as f64 / (samples - 1) as f64)
        .chain(extra.iter().copied().filter(|t| *t >= 0.0 && *t <= horizon))
        .collect();
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| abs(*a - *b) <= 1e-12 * horizon.max(1.0));
    g
}

/// [`DEFAULT_GRID_SAMPLES`] uniform samples plus every switching time of `u`.
pub fn default_grid(u: &Control) -> Vec<f64> {
    uniform_grid(u.horizon(), DEFAULT_GRID_SAMPLES, &u.switch_times())
}

/// `p` and `q` for a candidate control, evaluable at any `t` in `[0, T]`.
pub struct AdjointCurves {
    flow: ArcFlow,
    p_nodes: Vec<Vec<f64>>,
    q_nodes: Vec<Vec<f64>>,
    perron: PerronPair,
}

impl AdjointCurves {
    /// Fails with [`Error::NotSimple`] if `rho(C(T, u))` is not simple.
    pub fn new(sys: &PBCSystem, u: &Control) -> Result<Self> {
        let flow = ArcFlow::new(sys, u)?;
        let c = flow.monodromy();
        let perron = perron_pair(&c, DEFAULT_TOL)?.require_simple()?;
        let p_nodes = flow.forward_nodes(&perron.v);
        let q_nodes = flow.backward_nodes(&perron.w);
        Ok(Self {
            flow,
            p_nodes,
            q_nodes,
            perron,
        })
    }

    pub fn perron(&self) -> &PerronPair {
        &self.perron
    }

    /// `p(t) = C(t, 0) v*`
    pub fn p(&self, t: f64) -> Result<Vec<f64>> {
        self.flow.forward_at(&self.p_nodes, t)
    }

    /// `q(t) = C(T, t)' w*`
    pub fn q(&self, t: f64) -> Result<Vec<f64>> {
        self.flow.backward_at(&self.q_nodes, t)
    }
}

/// Adjoint data on a grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AdjointData {
    pub perron: PerronPair,
    pub times: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
}

pub fn adjoint_data(sys: &PBCSystem, u: &Control, grid: &[f64]) -> Result<AdjointData> {
    let curves = AdjointCurves::new(sys, u)?;
    let p = grid.iter().map(|&t| curves.p(t)).collect::<Result<Vec<_>>>()?;
    let q = grid.iter().map(|&t| curves.q(t)).collect::<Result<Vec<_>>>()?;
    Ok(AdjointData {
        perron: curves.perron,
        times: grid.to_vec(),
        p,
        q,
    })
}

/// `m(t) = q(t)' B p(t)` on a grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SwitchingFunctionSamples {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Interpolated zero crossings between samples of opposite sign.
    pub sign_changes: Vec<f64>,
    pub m_start: f64,
    pub m_end: f64,
    /// `max |m|` over the grid.
    pub scale: f64,
    /// `|m(0) - m(T)| / scale`; zero by the periodicity of `m`.
    pub periodicity_residual: f64,
}

pub fn switching_function(sys: &PBCSystem, u: &Control, grid: &[f64]) -> Result<SwitchingFunctionSamples> {
    let curves = AdjointCurves::new(sys, u)?;
    switching_samples(sys, &curves, grid)
}

fn switching_samples(sys: &PBCSystem, curves: &AdjointCurves, grid: &[f64]) -> Result<SwitchingFunctionSamples> {
    let b = sys.b();
    let m_at = |t: f64| -> Result<f64> { Ok(b.bilinear(&curves.q(t)?, &curves.p(t)?)) };
    let values = grid.iter().map(|&t| m_at(t)).collect::<Result<Vec<_>>>()?;
    let m_start = m_at(0.0)?;
    let m_end = m_at(sys.horizon())?;
    let scale = values
        .iter()
        .fold(abs(m_start).max(abs(m_end)), |s, v| s.max(abs(*v)));

    let band = ZERO_BAND * scale;
    let mut sign_changes = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (&t, &m) in grid.iter().zip(&values) {
        if abs(m) <= band {
            continue;
        }
        if let Some((t0, m0)) = last {
            if (m0 > 0.0) != (m > 0.0) {
                sign_changes.push(t0 + (t - t0) * m0 / (m0 - m));
            }
        }
        last = Some((t, m));
    }

    let periodicity_residual = if scale > 0.0 {
        abs(m_start - m_end) / scale
    } else {
        0.0
    };
    Ok(SwitchingFunctionSamples {
        times: grid.to_vec(),
        values,
        sign_changes,
        m_start,
        m_end,
        scale,
        periodicity_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Verdict {
    /// `sign(m)` agrees with `u` wherever `|m|` is above tolerance.
    Consistent,
    /// Some arc has `m` opposing `u` by more than the tolerance.
    Violated,
    /// `m` vanishes identically; the test carries no information.
    Vacuous,
}

/// Sign agreement on one arc, as `min(u * m) / max|m|` over its samples for
/// bang arcs and `-max|m| / max|m|` for arcs with `|u| < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ArcMargin {
    pub start: f64,
    pub end: f64,
    pub value: f64,
    pub margin: f64,
}

/// `|m(t_i)| / max|m|` at a declared switching time.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SwitchResidual {
    pub time: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MPReport {
    pub verdict: Verdict,
    pub tolerance: f64,
    pub perron: PerronPair,
    pub arc_margins: Vec<ArcMargin>,
    pub switch_residuals: Vec<SwitchResidual>,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub switching: SwitchingFunctionSamples,
}

/// First-order test of `u` on `grid`.
///
/// "Almost every t" is read as: agreement is required only where
/// `|m| > tol * max|m|`.
pub fn check_first_order(sys: &PBCSystem, u: &Control, grid: &[f64], tol: f64) -> Result<MPReport> {
    let curves = AdjointCurves::new(sys, u)?;
    let switching = switching_samples(sys, &curves, grid)?;
    let perron = curves.perron.clone();
    let scale = switching.scale;

    let arcs = u.arcs();
    let normalized = |m: f64| if scale > 0.0 { m / scale } else { 0.0 };
    let arc_margins: Vec<ArcMargin> = arcs
        .iter()
        .map(|arc| {
            let inside = switching
                .times
                .iter()
                .zip(&switching.values)
                .filter(|(t, _)| **t >= arc.start && **t <= arc.end)
                .map(|(_, m)| normalized(*m));
            let margin = if abs(arc.value) == 1.0 {
                inside.map(|m| arc.value * m).fold(f64::INFINITY, f64::min)
            } else {
                -inside.map(abs).fold(0.0, f64::max)
            };
            ArcMargin {
                start: arc.start,
                end: arc.end,
                value: arc.value,
                margin: if margin.is_finite() { margin } else { 0.0 },
            }
        })
        .collect();

    let switch_residuals = u
        .switch_times()
        .iter()
        .map(|&t| {
            let m = sys.b().bilinear(&curves.q(t)?, &curves.p(t)?);
            Ok(SwitchResidual {
                time: t,
                residual: abs(normalized(m)),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let vacuous_level = VACUOUS_THRESHOLD * sys.b().norm_fro() * perron.rho;
    let verdict = if scale <= vacuous_level {
        Verdict::Vacuous
    } else if arc_margins.iter().any(|a| a.margin < -tol) {
        Verdict::Violated
    } else {
        Verdict::Consistent
    };
    Ok(MPReport {
        verdict,
        tolerance: tol,
        perron,
        arc_margins,
        switch_residuals,
        switching,
    })
}

/// Result of [`symmetric_collinearity_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Collinearity {
    /// Sine of the angle between `exp(Q tau_2) w` and `v`.
    pub sine: f64,
    pub collinear: bool,
}

/// For symmetric `A`, `B` and a two-arc control with generators `P` then
/// `Q`, the Perron vectors of `C = exp(Q tau_2) exp(P tau_1)` satisfy
/// `exp(Q tau_2) w = c v` for some `c > 0`.
pub fn symmetric_collinearity_check(sys: &PBCSystem, u: &BangBangControl, tol: f64) -> Result<Collinearity> {
    if !(sys.a().is_symmetric(1e-12) && sys.b().is_symmetric(1e-12)) {
        return Err(Error::NotSymmetric);
    }
    if u.arc_count() != 2 {
        return Err(Error::InvalidControl("collinearity check needs exactly two arcs"));
    }
    let control = Control::from(u.clone());
    let flow = ArcFlow::new(sys, &control)?;
    let pp = perron_pair(&flow.monodromy(), DEFAULT_TOL)?;
    let second = f64::from(u.arc_sign(1));
    let x = expm_scaled(&sys.generator(second), u.durations()[1])?.mul_vec(&pp.w);
    let vv = dot(&pp.v, &pp.v);
    let coef = dot(&x, &pp.v) / vv;
    let perp: Vec<f64> = x.iter().zip(&pp.v).map(|(a, b)| a - coef * b).collect();
    let nx = norm2(&x);
    let sine = if nx == 0.0 { 0.0 } else { norm2(&perp) / nx };
    Ok(Collinearity {
        sine,
        collinear: sine <= tol,
    })
}

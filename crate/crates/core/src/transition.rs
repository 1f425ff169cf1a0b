//! Transition matrices `C(b, a, u)` and state trajectories.

use alloc::vec::Vec;

use crate::control::{Arc, Control};
use crate::error::{Error, Result};
use crate::expm::{expm, expm_scaled};
use crate::matrix::Matrix;
use crate::system::PBCSystem;

// Slack for comparing times against 0 and T.
const TIME_EPS: f64 = 1e-12;

pub(crate) fn check_horizon(sys: &PBCSystem, u: &Control) -> Result<()> {
    let (ts, tc) = (sys.horizon(), u.horizon());
    if (ts - tc).abs() > TIME_EPS * ts.max(1.0) {
        return Err(Error::HorizonMismatch {
            control: tc,
            system: ts,
        });
    }
    Ok(())
}

/// Transition matrix from time `a` to time `b`: the ordered product of
/// `exp((A + u_i B) dt_i)` over the arcs meeting `[a, b]`, latest factor on
/// the left. `C(a, a) = I`.
pub fn transition_matrix(sys: &PBCSystem, u: &Control, a: f64, b: f64) -> Result<Matrix> {
    sys.require_valid()?;
    check_horizon(sys, u)?;
    let horizon = sys.horizon();
    if !(a >= -TIME_EPS && a <= b && b <= horizon * (1.0 + TIME_EPS) + TIME_EPS) {
        return Err(Error::InvalidInterval { a, b, horizon });
    }
    let mut c = Matrix::identity(sys.dim());
    for arc in u.arcs() {
        let lo = arc.start.max(a);
        let hi = arc.end.min(b);
        if hi > lo {
            c = &expm_scaled(&sys.generator(arc.value), hi - lo)? * &c;
        }
    }
    Ok(c)
}

/// `C(T, 0, u)`.
pub fn monodromy(sys: &PBCSystem, u: &Control) -> Result<Matrix> {
    transition_matrix(sys, u, 0.0, sys.horizon())
}

/// Sampled solution of `x' = (A + uB) x`, `x(0) = x0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// `x(t) = C(t, 0, u) x0` at every grid time.
pub fn simulate(sys: &PBCSystem, u: &Control, x0: &[f64], grid: &[f64]) -> Result<Trajectory> {
    if x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: x0.len(),
        });
    }
    if x0.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let flow = ArcFlow::new(sys, u)?;
    let start = flow.forward_nodes(x0);
    let states = grid
        .iter()
        .map(|&t| flow.forward_at(&start, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times: grid.to_vec(),
        states,
    })
}

/// Arc-by-arc propagation used to evaluate `C(t, 0) x` and `y' C(T, t)` at
/// many times without rebuilding products.
pub(crate) struct ArcFlow {
    arcs: Vec<Arc>,
    generators: Vec<Matrix>,
    full: Vec<Matrix>,
    horizon: f64,
}

impl ArcFlow {
    pub(crate) fn new(sys: &PBCSystem, u: &Control) -> Result<Self> {
        sys.require_valid()?;
        check_horizon(sys, u)?;
        let arcs = u.arcs();
        let generators: Vec<Matrix> = arcs.iter().map(|a| sys.generator(a.value)).collect();
        let full = arcs
            .iter()
            .zip(&generators)
            .map(|(a, g)| expm_scaled(g, a.duration()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            arcs,
            generators,
            full,
            horizon: sys.horizon(),
        })
    }

    /// `C(T, 0)` as the ordered product of the per-arc factors.
    pub(crate) fn monodromy(&self) -> Matrix {
        let n = self.generators[0].dim();
        self.full.iter().fold(Matrix::identity(n), |acc, f| f * &acc)
    }

    fn arc_index(&self, t: f64) -> Result<usize> {
        if !(t >= -TIME_EPS && t <= self.horizon * (1.0 + TIME_EPS) + TIME_EPS) {
            return Err(Error::InvalidInterval {
                a: 0.0,
                b: t,
                horizon: self.horizon,
            });
        }
        Ok(self
            .arcs
            .iter()
            .position(|a| t < a.end)
            .unwrap_or(self.arcs.len() - 1))
    }

    /// `x` at the start of every arc.
    pub(crate) fn forward_nodes(&self, x0: &[f64]) -> Vec<Vec<f64>> {
        let mut nodes = Vec::with_capacity(self.arcs.len());
        let mut x = x0.to_vec();
        for f in &self.full {
            nodes.push(x.clone());
            x = f.mul_vec(&x);
        }
        nodes
    }

    pub(crate) fn forward_at(&self, nodes: &[Vec<f64>], t: f64) -> Result<Vec<f64>> {
        let i = self.arc_index(t)?;
        let arc = &self.arcs[i];
        let dt = (t - arc.start).max(0.0);
        if dt == 0.0 {
            return Ok(nodes[i].clone());
        }
        Ok(expm(&self.generators[i].scale(dt))?.mul_vec(&nodes[i]))
    }

    /// `q` at the end of every arc for `q(T) = y`, where `q(t)' = y' C(T, t)`.
    pub(crate) fn backward_nodes(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let k = self.arcs.len();
        let mut nodes = alloc::vec![Vec::new(); k];
        let mut q = y.to_vec();
        for i in (0..k).rev() {
            nodes[i] = q.clone();
            q = self.full[i].vec_mul(&q);
        }
        nodes
    }

    pub(crate) fn backward_at(&self, nodes: &[Vec<f64>], t: f64) -> Result<Vec<f64>> {
        let i = self.arc_index(t)?;
        let arc = &self.arcs[i];
        let dt = (arc.end - t).max(0.0);
        if dt == 0.0 {
            return Ok(nodes[i].clone());
        }
        Ok(expm(&self.generators[i].scale(dt))?.vec_mul(&nodes[i]))
    }
}

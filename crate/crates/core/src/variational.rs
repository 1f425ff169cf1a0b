//! Derivatives of `C(T)` and of its Perron root under the switching-time
//! perturbation `tau_i -> tau_i + s * alpha_i`.
//!
//! With `F_i = exp(tau_i X_i)` and `C = F_k ... F_1`, put
//! `G_i = (F_{i-1} ... F_1)^{-1} X_i (F_{i-1} ... F_1)` and `S = sum alpha_i G_i`.
//! Then at `s = 0`
//!
//! ```text
//! dC  = C S
//! ddC = C (S^2 + sum_{i<j} alpha_i alpha_j [G_i, G_j])      [X, Y] = YX - XY
//! ```
//!
//! The rigid shift `alpha_0` of all switching times is fixed to zero; it is a
//! cyclic re-anchoring and does not change the spectrum.

use alloc::vec::Vec;

use crate::control::BangBangControl;
use crate::error::{Error, Result};
use crate::expm::expm_scaled;
use crate::matrix::{lie_bracket, Matrix};
use crate::perron::{group_inverse, perron_pair, PerronPair, DEFAULT_TOL};
use crate::system::PBCSystem;

fn check_alpha(u: &BangBangControl, alpha: &[f64]) -> Result<()> {
    if alpha.len() != u.arc_count() {
        return Err(Error::DimensionMismatch {
            expected: u.arc_count(),
            found: alpha.len(),
        });
    }
    if alpha.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn arc_generators(sys: &PBCSystem, u: &BangBangControl) -> Vec<Matrix> {
    (0..u.arc_count())
        .map(|i| sys.generator(f64::from(u.arc_sign(i))))
        .collect()
}

/// `C(T)` for arc durations `tau_i + s * alpha_i`. Fails with
/// [`Error::InvalidPerturbation`] if a duration turns negative.
pub fn perturbed_transition(sys: &PBCSystem, u: &BangBangControl, alpha: &[f64], s: f64) -> Result<Matrix> {
    sys.require_valid()?;
    check_alpha(u, alpha)?;
    let mut c = Matrix::identity(sys.dim());
    for ((x, tau), a) in arc_generators(sys, u).iter().zip(u.durations()).zip(alpha) {
        let d = tau + s * a;
        if d < 0.0 {
            return Err(Error::InvalidPerturbation);
        }
        c = &expm_scaled(x, d)? * &c;
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TransitionDerivatives {
    pub alpha: Vec<f64>,
    /// `C(T)` at `s = 0`.
    pub c: Matrix,
    pub dc: Matrix,
    pub ddc: Matrix,
}

/// First and second `s`-derivatives of `C(T)` at `s = 0`. The formulas hold
/// for any `alpha`; second-order optimality conditions use `sum alpha_i = 0`.
pub fn transition_derivatives(sys: &PBCSystem, u: &BangBangControl, alpha: &[f64]) -> Result<TransitionDerivatives> {
    sys.require_valid()?;
    check_alpha(u, alpha)?;
    let n = sys.dim();
    let gens = arc_generators(sys, u);
    let mut prefix = Matrix::identity(n);
    let mut prefix_inv = Matrix::identity(n);
    let mut g = Vec::with_capacity(gens.len());
    for (x, tau) in gens.iter().zip(u.durations()) {
        g.push(&(&prefix_inv * x) * &prefix);
        prefix = &expm_scaled(x, tau)? * &prefix;
        prefix_inv = &prefix_inv * &expm_scaled(x, -tau)?;
    }
    let c = prefix;

    let mut s = Matrix::zeros(n);
    for (gi, a) in g.iter().zip(alpha) {
        s = s.add_scaled(gi, *a);
    }
    let mut second = &s * &s;
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            let coef = alpha[i] * alpha[j];
            if coef != 0.0 {
                second = second.add_scaled(&lie_bracket(&g[i], &g[j])?, coef);
            }
        }
    }
    Ok(TransitionDerivatives {
        alpha: alpha.to_vec(),
        dc: &c * &s,
        ddc: &c * &second,
        c,
    })
}

/// `drho = w' dC v` and `ddrho = w' ddC v + 2 w' dC D# dC v` with
/// `D = rho I - C` and `D#` its group inverse.
pub fn spectral_radius_derivatives(c: &Matrix, pp: &PerronPair, dc: &Matrix, ddc: &Matrix) -> Result<(f64, f64)> {
    if !pp.simple {
        return Err(Error::NotSimple {
            rho: pp.rho,
            gap: pp.gap,
        });
    }
    let n = c.dim();
    for m in [dc, ddc] {
        if m.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.dim(),
            });
        }
    }
    let d = Matrix::identity(n).scale(pp.rho).add_scaled(c, -1.0);
    let dsharp = group_inverse(&d, &pp.v, &pp.w)?;
    let dcv = dc.mul_vec(&pp.v);
    let drho = crate::matrix::dot(&pp.w, &dcv);
    let ddrho = ddc.bilinear(&pp.w, &pp.v) + 2.0 * dc.bilinear(&pp.w, &dsharp.mul_vec(&dcv));
    Ok((drho, ddrho))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VariationalDerivatives {
    pub alpha: Vec<f64>,
    pub dc: Matrix,
    pub ddc: Matrix,
    pub drho: f64,
    pub ddrho: f64,
    pub perron: PerronPair,
}

/// [`transition_derivatives`] followed by [`spectral_radius_derivatives`].
pub fn variational_derivatives(sys: &PBCSystem, u: &BangBangControl, alpha: &[f64]) -> Result<VariationalDerivatives> {
    let td = transition_derivatives(sys, u, alpha)?;
    let perron = perron_pair(&td.c, DEFAULT_TOL)?.require_simple()?;
    let (drho, ddrho) = spectral_radius_derivatives(&td.c, &perron, &td.dc, &td.ddc)?;
    Ok(VariationalDerivatives {
        alpha: td.alpha,
        dc: td.dc,
        ddc: td.ddc,
        drho,
        ddrho,
        perron,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ex5() -> PBCSystem {
        PBCSystem::new(
            Matrix::from_rows(&[[-2.5, 1.5], [3.0, -2.5]]).unwrap(),
            Matrix::from_rows(&[[1.5, -0.5], [1.0, -1.5]]).unwrap(),
            4.0,
        )
        .unwrap()
    }

    fn ex5_control() -> BangBangControl {
        BangBangControl::new(1, vec![1.0, 2.0, 3.0], 4.0).unwrap()
    }

    #[test]
    fn zero_alpha() {
        let td = transition_derivatives(&ex5(), &ex5_control(), &[0.0; 4]).unwrap();
        assert_eq!(td.dc, Matrix::zeros(2));
        assert_eq!(td.ddc, Matrix::zeros(2));
    }

    #[test]
    fn matches_central_differences() {
        let sys = ex5();
        let u = ex5_control();
        let alpha = [0.3, -0.7, 0.1, 0.3];
        let td = transition_derivatives(&sys, &u, &alpha).unwrap();
        let h = 1e-4;
        let cp = perturbed_transition(&sys, &u, &alpha, h).unwrap();
        let cm = perturbed_transition(&sys, &u, &alpha, -h).unwrap();
        let d1 = (&cp - &cm).scale(0.5 / h);
        let d2 = (&(&cp + &cm) - &td.c.scale(2.0)).scale(1.0 / (h * h));
        assert!(d1.rel_diff(&td.dc) < 1e-6);
        assert!(d2.rel_diff(&td.ddc) < 1e-4);
    }

    #[test]
    fn euler_direction() {
        let c = Matrix::from_rows(&[[1.0, 2.0], [0.5, 0.3]]).unwrap();
        let pp = perron_pair(&c, DEFAULT_TOL).unwrap();
        let (d1, d2) = spectral_radius_derivatives(&c, &pp, &c, &Matrix::zeros(2)).unwrap();
        assert!((d1 - pp.rho).abs() < 1e-13 * pp.rho);
        // rho(C + sC) = (1 + s) rho is linear in s
        assert!(d2.abs() < 1e-12);
    }

    #[test]
    fn perturbation_limits() {
        let sys = ex5();
        let u = ex5_control();
        assert_eq!(
            perturbed_transition(&sys, &u, &[1.0, -1.0, 0.0, 0.0], 1.5),
            Err(Error::InvalidPerturbation)
        );
        assert!(matches!(
            transition_derivatives(&sys, &u, &[1.0, -1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}

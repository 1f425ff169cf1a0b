//! Perron root and eigenvectors of a nonnegative matrix, and the group
//! inverse of `rho I - C`.

use alloc::vec;
use alloc::vec::Vec;

use crate::decomp::eigenvalues;
use crate::error::{Error, Result};
use crate::math::{abs, norm2};
use crate::matrix::{dot, Matrix};

/// Relative gap `(rho - |lambda_2|) / rho` above which the Perron root counts
/// as simple.
pub const SIMPLICITY_THRESHOLD: f64 = 1e-8;

/// Default residual tolerance for [`perron_pair`].
pub const DEFAULT_TOL: f64 = 1e-10;

const INVERSE_ITERATIONS: usize = 50;

/// Dominant eigenvalue of a nonnegative matrix with right and left
/// eigenvectors.
///
/// `v` is scaled so that its largest-magnitude entry is positive, `w` so that
/// `w'v = 1`. `gap` is `rho - |lambda_2|`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PerronPair {
    pub rho: f64,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub gap: f64,
    pub simple: bool,
}

impl PerronPair {
    /// Fails with [`Error::NotSimple`] unless the gap test passed.
    pub fn require_simple(self) -> Result<Self> {
        if self.simple {
            Ok(self)
        } else {
            Err(Error::NotSimple {
                rho: self.rho,
                gap: self.gap,
            })
        }
    }

    /// Residuals `|Cv - rho v| / (|C| |v|)` and `|C'w - rho w| / (|C| |w|)`.
    pub fn residuals(&self, c: &Matrix) -> (f64, f64) {
        let scale = c.norm_fro().max(f64::MIN_POSITIVE);
        let rv = sub_scaled(&c.mul_vec(&self.v), &self.v, self.rho);
        let rw = sub_scaled(&c.vec_mul(&self.w), &self.w, self.rho);
        (
            norm2(&rv) / (scale * norm2(&self.v)),
            norm2(&rw) / (scale * norm2(&self.w)),
        )
    }
}

fn sub_scaled(x: &[f64], y: &[f64], s: f64) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - s * b).collect()
}

/// Perron root of `c`.
///
/// The spectrum comes from Hessenberg QR (for `rho` and the gap); the
/// eigenvectors from shifted inverse iteration on `C` and `C'`, after which
/// `rho` is refined as `w'Cv`. Residuals above `tol * |C|` give
/// [`Error::NonConvergence`]. A non-simple root is flagged, not rejected,
/// unless `w'v` vanishes and no normalization exists.
pub fn perron_pair(c: &Matrix, tol: f64) -> Result<PerronPair> {
    let n = c.dim();
    let cmax = c.max_abs();
    if !c.is_finite() {
        return Err(Error::NonFinite);
    }
    if cmax == 0.0 {
        return Err(Error::Singular);
    }
    if c.min_entry() < -1e-8 * cmax {
        return Err(Error::InvalidArgument("Perron pair needs a nonnegative matrix"));
    }

    let mut moduli: Vec<(f64, f64)> = eigenvalues(c)?
        .iter()
        .map(|e| (e.modulus(), e.re))
        .collect();
    moduli.sort_by(|a, b| b.0.total_cmp(&a.0));
    let rho_qr = moduli[0].0;
    if rho_qr <= 0.0 {
        return Err(Error::Singular);
    }
    let gap = if n > 1 { rho_qr - moduli[1].0 } else { rho_qr };

    let v = inverse_iteration(c, rho_qr)?;
    let w = inverse_iteration(&c.transpose(), rho_qr)?;

    let mut v = v;
    let imax = v
        .iter()
        .enumerate()
        .fold(0, |best, (i, x)| if abs(*x) > abs(v[best]) { i } else { best });
    if v[imax] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let wv = dot(&w, &v);
    if abs(wv) <= 1e-14 * norm2(&w) * norm2(&v) {
        return Err(Error::NotSimple { rho: rho_qr, gap });
    }
    let w: Vec<f64> = w.iter().map(|x| x / wv).collect();

    let rho = c.bilinear(&w, &v);
    let pair = PerronPair {
        rho,
        v,
        w,
        gap: gap.max(0.0),
        simple: gap > SIMPLICITY_THRESHOLD * rho,
    };
    let (rv, rw) = pair.residuals(c);
    if rv > tol || rw > tol || !rv.is_finite() || !rw.is_finite() {
        return Err(Error::NonConvergence {
            residual: rv.max(rw),
        });
    }
    Ok(pair)
}

/// Spectral radius via [`perron_pair`] with the default tolerance; the root
/// need not be simple.
pub fn spectral_radius(c: &Matrix) -> Result<f64> {
    Ok(perron_pair(c, DEFAULT_TOL)?.rho)
}

fn inverse_iteration(c: &Matrix, rho: f64) -> Result<Vec<f64>> {
    let n = c.dim();
    let mut offset = 1e-10;
    let lu = loop {
        let shifted = c.add_scaled(&Matrix::identity(n), -rho * (1.0 + offset));
        match shifted.lu() {
            Ok(lu) => break lu,
            Err(_) if offset < 1e-4 => offset *= 100.0,
            Err(e) => return Err(e),
        }
    };
    let mut x = vec![1.0 / libm::sqrt(n as f64); n];
    for _ in 0..INVERSE_ITERATIONS {
        let mut y = lu.solve(&x);
        let ny = norm2(&y);
        if !ny.is_finite() || ny == 0.0 {
            return Err(Error::NonConvergence { residual: ny });
        }
        y.iter_mut().for_each(|t| *t /= ny);
        if dot(&y, &x) < 0.0 {
            y.iter_mut().for_each(|t| *t = -*t);
        }
        let change = norm2(&sub_scaled(&y, &x, 1.0));
        x = y;
        if change <= 4.0 * f64::EPSILON * (n as f64) {
            break;
        }
    }
    Ok(x)
}

/// Group inverse of `d` given right/left null vectors with `w'v = 1`:
/// `D# = (D + v w')^{-1} - v w'`.
pub fn group_inverse(d: &Matrix, v: &[f64], w: &[f64]) -> Result<Matrix> {
    let n = d.dim();
    for len in [v.len(), w.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    let vw = Matrix::outer(v, w);
    let bordered = d + &vw;
    Ok(&bordered.inverse()? - &vw)
}

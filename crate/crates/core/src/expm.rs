//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants of degree 3, 5, 7, 9 or 13 (Higham, 2005).

use crate::error::{Error, Result};
use crate::math::{ceil, ln};
use crate::matrix::Matrix;

const THETA_3: f64 = 1.495585217958292e-2;
#[allow(clippy::excessive_precision)]
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `e^M`.
///
/// Returns [`Error::Overflow`] when the result (or an intermediate square)
/// is not representable.
pub fn expm(m: &Matrix) -> Result<Matrix> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = m.dim();
    let norm = m.norm_one();
    let result = if norm <= THETA_3 {
        pade_low(m, &B3)?
    } else if norm <= THETA_5 {
        pade_low(m, &B5)?
    } else if norm <= THETA_7 {
        pade_low(m, &B7)?
    } else if norm <= THETA_9 {
        pade_low(m, &B9)?
    } else {
        let s = ceil(ln(norm / THETA_13) / core::f64::consts::LN_2).max(0.0) as i32;
        let scaled = m.scale(libm::ldexp(1.0, -s));
        let mut r = pade13(&scaled)?;
        for _ in 0..s {
            r = &r * &r;
            if !r.is_finite() {
                return Err(Error::Overflow);
            }
        }
        r
    };
    if !result.is_finite() {
        return Err(Error::Overflow);
    }
    debug_assert_eq!(result.dim(), n);
    Ok(result)
}

/// `e^{M t}`
pub fn expm_scaled(m: &Matrix, t: f64) -> Result<Matrix> {
    expm(&m.scale(t))
}

fn pade_low(a: &Matrix, b: &[f64]) -> Result<Matrix> {
    let n = a.dim();
    let a2 = a * a;
    let mut u = Matrix::identity(n).scale(b[1]);
    let mut v = Matrix::identity(n).scale(b[0]);
    let mut pow = Matrix::identity(n);
    let mut k = 2;
    while k < b.len() {
        pow = &pow * &a2;
        v = v.add_scaled(&pow, b[k]);
        u = u.add_scaled(&pow, b[k + 1]);
        k += 2;
    }
    let u = a * &u;
    rational(&u, &v)
}

fn pade13(a: &Matrix) -> Result<Matrix> {
    let n = a.dim();
    let id = Matrix::identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;

    let inner_u = a6
        .scale(b[13])
        .add_scaled(&a4, b[11])
        .add_scaled(&a2, b[9]);
    let u = (&a6 * &inner_u)
        .add_scaled(&a6, b[7])
        .add_scaled(&a4, b[5])
        .add_scaled(&a2, b[3])
        .add_scaled(&id, b[1]);
    let u = a * &u;

    let inner_v = a6
        .scale(b[12])
        .add_scaled(&a4, b[10])
        .add_scaled(&a2, b[8]);
    let v = (&a6 * &inner_v)
        .add_scaled(&a6, b[6])
        .add_scaled(&a4, b[4])
        .add_scaled(&a2, b[2])
        .add_scaled(&id, b[0]);
    rational(&u, &v)
}

// (V - U)^{-1} (V + U)
fn rational(u: &Matrix, v: &Matrix) -> Result<Matrix> {
    let n = u.dim();
    let lu = (v - u).lu().map_err(|_| Error::Overflow)?;
    let rhs = v + u;
    let mut out = Matrix::zeros(n);
    let mut col = alloc::vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = rhs[(i, j)];
        }
        let x = lu.solve(&col);
        for i in 0..n {
            out[(i, j)] = x[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::exp;

    // Term-by-term Taylor series, independent of the Padé path.
    fn taylor(m: &Matrix, terms: usize) -> Matrix {
        let n = m.dim();
        let mut sum = Matrix::identity(n);
        let mut term = Matrix::identity(n);
        for k in 1..=terms {
            term = (&term * m).scale(1.0 / k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn zero_and_diagonal() {
        assert_eq!(expm(&Matrix::zeros(3)).unwrap(), Matrix::identity(3));
        let e = expm(&Matrix::from_diag(&[1.0, 2.0])).unwrap();
        assert!((e[(0, 0)] - exp(1.0)).abs() < 1e-15 * exp(1.0));
        assert!((e[(1, 1)] - exp(2.0)).abs() < 1e-14 * exp(2.0));
        assert_eq!(e[(0, 1)], 0.0);
        assert_eq!(e[(1, 0)], 0.0);
    }

    #[test]
    fn matches_taylor_oracle() {
        let a = Matrix::from_rows(&[[2.2, 1.6], [1.6, -0.2]]).unwrap();
        let e = expm(&a).unwrap();
        let t = taylor(&a, 60);
        assert!(e.rel_diff(&t) < 1e-12, "{}", e.rel_diff(&t));
    }

    #[test]
    fn every_pade_degree_matches_taylor() {
        let base = Matrix::from_rows(&[[0.3, -0.2, 0.1], [0.5, -0.4, 0.2], [0.0, 0.7, -0.1]]).unwrap();
        let bn = base.norm_one();
        for target in [0.01, 0.2, 0.9, 2.0, 5.0, 12.0] {
            let m = base.scale(target / bn);
            let e = expm(&m).unwrap();
            let t = taylor(&m, 120);
            assert!(e.rel_diff(&t) < 1e-13 * target.max(1.0), "norm {target}: {}", e.rel_diff(&t));
        }
    }

    #[test]
    fn overflow_is_reported() {
        let m = Matrix::from_diag(&[1000.0, 0.0]);
        assert_eq!(expm(&m), Err(Error::Overflow));
    }
}

#![allow(dead_code)]

use pbcs_core::{BangBangControl, Matrix, PBCSystem};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn ex2(t: f64) -> PBCSystem {
    PBCSystem::new(
        Matrix::from_rows(&[[2.2, 1.6], [1.6, -0.2]]).unwrap(),
        Matrix::from_rows(&[[-1.1, 0.2], [0.95, 2.1]]).unwrap(),
        t,
    )
    .unwrap()
}

pub fn ex5() -> PBCSystem {
    PBCSystem::new(
        Matrix::from_rows(&[[-2.5, 1.5], [3.0, -2.5]]).unwrap(),
        Matrix::from_rows(&[[1.5, -0.5], [1.0, -1.5]]).unwrap(),
        4.0,
    )
    .unwrap()
}

pub fn ex5_candidate() -> BangBangControl {
    BangBangControl::new(1, vec![1.0, 2.0, 3.0], 4.0).unwrap()
}

/// `A + B` and `A - B` Metzler: off-diagonals of `A` dominate `|B|`.
pub fn random_system(rng: &mut ChaCha8Rng, n: usize, horizon: f64) -> PBCSystem {
    let mut a = Matrix::zeros(n);
    let mut b = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = rng.gen_range(-1.0..1.0);
        }
    }
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = if i == j {
                rng.gen_range(-1.0..1.0)
            } else {
                b[(i, j)].abs() + rng.gen_range(0.05..1.0)
            };
        }
    }
    PBCSystem::new(a, b, horizon).unwrap()
}

/// `k` arcs with durations in `[0.2, 1)`, random first sign.
pub fn random_bang_bang(rng: &mut ChaCha8Rng, k: usize) -> BangBangControl {
    let durations: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
    let r = if rng.gen_bool(0.5) { 1 } else { -1 };
    BangBangControl::from_durations(r, &durations).unwrap()
}

/// Random direction with `sum alpha_i = 0` and unit norm.
pub fn random_alpha(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut a: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = a.iter().sum::<f64>() / k as f64;
    a.iter_mut().for_each(|x| *x -= mean);
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    a.iter_mut().for_each(|x| *x /= norm);
    a
}

pub fn random_positive(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let data: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.0..1.0)).collect();
    Matrix::from_row_slice(n, &data).unwrap()
}

/// Sine of the angle between `x` and `y`.
pub fn angle_residual(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let yy: f64 = y.iter().map(|b| b * b).sum();
    let perp: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - dot / yy * b).collect();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    perp.iter().map(|a| a * a).sum::<f64>().sqrt() / nx
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

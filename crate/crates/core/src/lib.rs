//! Variational optimality tests for positive bilinear control systems
//!
//! A positive bilinear control system (PBCS) is `x' = (A + u(t) B) x` with
//! `u(t)` in `[-1, 1]` and `A + kB` Metzler for every `k` in `[-1, 1]`. The
//! transition matrix `C(T, u)` is then nonnegative, and the control that
//! maximizes its Perron root `rho(C(T, u))` is the "most destabilizing"
//! switching law.
//!
//! This crate evaluates candidate controls for that problem:
//!
//! * [`matrix`], [`expm`], [`perron`], [`decomp`]: a small dense kernel
//!   (LU, matrix exponential, Perron pair, group inverse, Jacobi SVD).
//! * [`system`], [`control`], [`transition`]: the model and its flow.
//! * [`first_order`]: adjoint curves `p`, `q`, the switching function
//!   `m(t) = q(t)' B p(t)` and the first-order maximum-principle verdict.
//! * [`high_order`] and [`variational`]: the bracket test for the singular
//!   control `u = 0`, the second-order test for bang-bang controls, and the
//!   first/second derivatives of `C` and `rho` under switching-time
//!   perturbations.
//! * [`search`]: a brute-force lower-bound oracle for the maximal spectral
//!   radius and a one-sided "not GAS" certificate.
//!
//! Lie brackets follow the convention `[P, Q] = QP - PQ` throughout.
//!
//! The crate is `no_std` and needs only `alloc`.
#![no_std]
// dense kernels index several arrays in step; `!(x > y)` rejects NaN on purpose
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod control;
pub mod decomp;
mod error;
pub mod expm;
pub mod first_order;
pub mod high_order;
mod math;
pub mod matrix;
pub mod perron;
pub mod search;
pub mod system;
pub mod transition;
pub mod variational;

pub use control::{Arc, BangBangControl, Control, PiecewiseConstantControl};
pub use error::{Error, Result};
pub use expm::expm;
pub use matrix::{is_metzler, lie_bracket, Matrix};
pub use perron::{group_inverse, perron_pair, PerronPair};
pub use system::{PBCSystem, ValidationReport};
pub use transition::{simulate, transition_matrix, Trajectory};

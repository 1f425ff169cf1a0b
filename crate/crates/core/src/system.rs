use crate::error::{Error, Result};
use crate::matrix::{is_metzler, Matrix};

/// `x' = (A + u B) x` on `[0, T]`, `u(t)` in `[-1, 1]`.
///
/// Off-diagonal entries of `A + kB` are affine in `k`, so `A + kB` is Metzler
/// for every `k` in `[-1, 1]` exactly when both `A + B` and `A - B` are.
/// Construction only checks shapes; [`PBCSystem::validate`] reports the
/// Metzler conditions and analysis entry points refuse invalid systems.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PBCSystem {
    #[cfg_attr(feature = "serde", serde(rename = "A"))]
    a: Matrix,
    #[cfg_attr(feature = "serde", serde(rename = "B"))]
    b: Matrix,
    #[cfg_attr(feature = "serde", serde(rename = "T"))]
    horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ValidationReport {
    pub plus_metzler: bool,
    pub minus_metzler: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.plus_metzler && self.minus_metzler
    }
}

impl PBCSystem {
    pub fn new(a: Matrix, b: Matrix, horizon: f64) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidArgument("horizon must be positive and finite"));
        }
        Ok(Self { a, b, horizon })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Same drift and control matrices on a different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), horizon)
    }

    /// `A + u B`
    pub fn generator(&self, u: f64) -> Matrix {
        self.a.add_scaled(&self.b, u)
    }

    pub fn validate(&self) -> ValidationReport {
        let tol = 1e-12 * self.a.max_abs().max(self.b.max_abs()).max(1.0);
        ValidationReport {
            plus_metzler: is_metzler(&self.generator(1.0), tol),
            minus_metzler: is_metzler(&self.generator(-1.0), tol),
        }
    }

    pub fn require_valid(&self) -> Result<()> {
        if self.validate().is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidSystem)
        }
    }
}

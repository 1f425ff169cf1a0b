//! Control signals as finite arc lists.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::abs;

/// Arcs shorter than this are rejected at construction.
pub const MIN_ARC: f64 = 1e-12;

/// Constant piece `u(t) = value` on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

impl Arc {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Bang-bang control: `u = r` on `(0, t_1)`, `-r` on `(t_1, t_2)`, and so on
/// up to the horizon `T`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BangBangControl {
    r: i8,
    switch_times: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(skip))]
    horizon: f64,
}

impl BangBangControl {
    /// `r` must be `+1` or `-1`; switch times strictly increasing in `(0, T)`
    /// with every arc at least [`MIN_ARC`] long.
    pub fn new(r: i8, switch_times: Vec<f64>, horizon: f64) -> Result<Self> {
        if r != 1 && r != -1 {
            return Err(Error::InvalidControl("first arc sign must be +1 or -1"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidControl("horizon must be positive"));
        }
        let mut prev = 0.0;
        for &t in switch_times.iter().chain(core::iter::once(&horizon)) {
            if !t.is_finite() {
                return Err(Error::NonFinite);
            }
            if t - prev < MIN_ARC {
                return Err(Error::InvalidControl("switch times must increase inside (0, T) with arcs >= 1e-12"));
            }
            prev = t;
        }
        Ok(Self {
            r,
            switch_times,
            horizon,
        })
    }

    pub fn constant(r: i8, horizon: f64) -> Result<Self> {
        Self::new(r, Vec::new(), horizon)
    }

    /// Alternating arcs starting with sign `r` and the given durations; the
    /// horizon is their sum.
    pub fn from_durations(r: i8, durations: &[f64]) -> Result<Self> {
        let mut t = 0.0;
        let mut switch_times = Vec::with_capacity(durations.len().saturating_sub(1));
        for (i, d) in durations.iter().enumerate() {
            t += d;
            if i + 1 < durations.len() {
                switch_times.push(t);
            }
        }
        Self::new(r, switch_times, t)
    }

    /// Builds a control from signed pieces, dropping empty pieces and merging
    /// neighbours with equal sign. Pieces shorter than [`MIN_ARC`] are folded
    /// into their successor (or predecessor for the last one) so the total
    /// duration is preserved. The horizon is set to `horizon` exactly.
    pub fn from_signed_pieces(pieces: &[(i8, f64)], horizon: f64) -> Result<Self> {
        let mut merged: Vec<(i8, f64)> = Vec::with_capacity(pieces.len());
        let mut carry = 0.0;
        for &(s, d) in pieces {
            if d < 0.0 || !d.is_finite() {
                return Err(Error::InvalidControl("negative or non-finite arc duration"));
            }
            let d = d + carry;
            if d < MIN_ARC {
                carry = d;
                continue;
            }
            carry = 0.0;
            match merged.last_mut() {
                Some(last) if last.0 == s => last.1 += d,
                _ => merged.push((s, d)),
            }
        }
        match merged.last_mut() {
            Some(last) => last.1 += carry,
            None => return Err(Error::InvalidControl("control has no arc of positive length")),
        }
        let mut t = 0.0;
        let mut switch_times = Vec::with_capacity(merged.len() - 1);
        for &(_, d) in &merged[..merged.len() - 1] {
            t += d;
            switch_times.push(t);
        }
        Self::new(merged[0].0, switch_times, horizon)
    }

    /// Sign of the first arc.
    pub fn first_sign(&self) -> i8 {
        self.r
    }

    pub fn switch_times(&self) -> &[f64] {
        &self.switch_times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn arc_count(&self) -> usize {
        self.switch_times.len() + 1
    }

    /// Sign of arc `i` (0-based).
    pub fn arc_sign(&self, i: usize) -> i8 {
        if i.is_multiple_of(2) {
            self.r
        } else {
            -self.r
        }
    }

    /// Breakpoints `0 = t_0 < t_1 < ... < t_k = T`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut bp = Vec::with_capacity(self.arc_count() + 1);
        bp.push(0.0);
        bp.extend_from_slice(&self.switch_times);
        bp.push(self.horizon);
        bp
    }

    /// Arc durations `tau_i = t_i - t_{i-1}`.
    pub fn durations(&self) -> Vec<f64> {
        self.breakpoints().windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn arcs(&self) -> Vec<Arc> {
        self.breakpoints()
            .windows(2)
            .enumerate()
            .map(|(i, w)| Arc {
                start: w[0],
                end: w[1],
                value: f64::from(self.arc_sign(i)),
            })
            .collect()
    }

    fn signed_pieces(&self) -> Vec<(i8, f64)> {
        self.durations()
            .into_iter()
            .enumerate()
            .map(|(i, d)| (self.arc_sign(i), d))
            .collect()
    }

    /// Rotates the arc sequence so that breakpoint `pivot` (0 is `t_0 = 0`)
    /// becomes time 0. The horizon is unchanged; if the last and first arcs
    /// end up adjacent with equal sign they are merged.
    pub fn cyclic_shift(&self, pivot: usize) -> Result<Self> {
        let k = self.arc_count();
        if pivot >= k {
            return Err(Error::BadIndex { index: pivot, len: k });
        }
        if pivot == 0 {
            return Ok(self.clone());
        }
        let pieces = self.signed_pieces();
        let rotated: Vec<(i8, f64)> = pieces[pivot..].iter().chain(&pieces[..pivot]).copied().collect();
        Self::from_signed_pieces(&rotated, self.horizon)
    }

    /// `copies`-fold periodic extension onto `[0, copies * T]`.
    pub fn periodic_extension(&self, copies: usize) -> Result<Self> {
        if copies == 0 {
            return Err(Error::InvalidArgument("periodic extension needs at least one copy"));
        }
        let pieces = self.signed_pieces();
        let mut all = Vec::with_capacity(pieces.len() * copies);
        for _ in 0..copies {
            all.extend_from_slice(&pieces);
        }
        Self::from_signed_pieces(&all, self.horizon * copies as f64)
    }

    pub fn to_piecewise(&self) -> PiecewiseConstantControl {
        let arcs = self.arcs();
        PiecewiseConstantControl {
            breakpoints: self.breakpoints(),
            values: arcs.iter().map(|a| a.value).collect(),
        }
    }
}

impl TryFrom<&PiecewiseConstantControl> for BangBangControl {
    type Error = Error;

    /// Requires every value to be exactly `+1` or `-1`; equal neighbours merge.
    fn try_from(pc: &PiecewiseConstantControl) -> Result<Self> {
        let pieces = pc
            .arcs()
            .iter()
            .map(|a| {
                if a.value == 1.0 {
                    Ok((1, a.duration()))
                } else if a.value == -1.0 {
                    Ok((-1, a.duration()))
                } else {
                    Err(Error::InvalidControl("piecewise control is not bang-bang"))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut bb = Self::from_signed_pieces(&pieces, pc.horizon())?;
        // reuse the original breakpoints so the conversion is exact
        let mut switch_times = Vec::new();
        for (i, w) in pc.values.windows(2).enumerate() {
            if w[0] != w[1] {
                switch_times.push(pc.breakpoints[i + 1]);
            }
        }
        bb.switch_times = switch_times;
        Ok(bb)
    }
}

/// Piecewise-constant control with values in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PiecewiseConstantControl {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstantControl {
    /// `breakpoints` run from `0` to `T`, strictly increasing with gaps of at
    /// least [`MIN_ARC`]; one value per arc.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || values.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidControl("need one value per arc and at least one arc"));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidControl("first breakpoint must be 0"));
        }
        if breakpoints.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if breakpoints.windows(2).any(|w| w[1] - w[0] < MIN_ARC) {
            return Err(Error::InvalidControl("breakpoints must increase with arcs >= 1e-12"));
        }
        if values.iter().any(|v| abs(*v) > 1.0) {
            return Err(Error::InvalidControl("control values must lie in [-1, 1]"));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(value: f64, horizon: f64) -> Result<Self> {
        Self::new(alloc::vec![0.0, horizon], alloc::vec![value])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1]
    }

    pub fn arcs(&self) -> Vec<Arc> {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| Arc {
                start: w[0],
                end: w[1],
                value: *v,
            })
            .collect()
    }
}

/// Any control the library can evaluate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "lowercase"))]
pub enum Control {
    BangBang(BangBangControl),
    Piecewise(PiecewiseConstantControl),
}

impl Control {
    pub fn horizon(&self) -> f64 {
        match self {
            Control::BangBang(c) => c.horizon(),
            Control::Piecewise(c) => c.horizon(),
        }
    }

    pub fn arcs(&self) -> Vec<Arc> {
        match self {
            Control::BangBang(c) => c.arcs(),
            Control::Piecewise(c) => c.arcs(),
        }
    }

    /// Value on the arc containing `t` (right-continuous, last arc closed).
    pub fn value_at(&self, t: f64) -> f64 {
        let arcs = self.arcs();
        arcs.iter()
            .find(|a| t < a.end)
            .unwrap_or(&arcs[arcs.len() - 1])
            .value
    }

    /// Interior switching points, i.e. breakpoints where the value changes.
    pub fn switch_times(&self) -> Vec<f64> {
        let arcs = self.arcs();
        arcs.windows(2)
            .filter(|w| w[0].value != w[1].value)
            .map(|w| w[0].end)
            .collect()
    }

    pub fn is_identically_zero(&self) -> bool {
        self.arcs().iter().all(|a| a.value == 0.0)
    }

    /// Bang-bang view of the control, if every arc value is `+-1`.
    pub fn as_bang_bang(&self) -> Option<BangBangControl> {
        match self {
            Control::BangBang(c) => Some(c.clone()),
            Control::Piecewise(c) => BangBangControl::try_from(c).ok(),
        }
    }
}

impl From<BangBangControl> for Control {
    fn from(c: BangBangControl) -> Self {
        Control::BangBang(c)
    }
}

impl From<PiecewiseConstantControl> for Control {
    fn from(c: PiecewiseConstantControl) -> Self {
        Control::Piecewise(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn ex5() -> BangBangControl {
        BangBangControl::new(1, vec![1.0, 2.0, 3.0], 4.0).unwrap()
    }

    #[test]
    fn construction_rules() {
        assert!(BangBangControl::new(0, vec![], 1.0).is_err());
        assert!(BangBangControl::new(1, vec![0.5, 0.5], 1.0).is_err());
        assert!(BangBangControl::new(1, vec![1.0], 1.0).is_err());
        assert!(BangBangControl::new(1, vec![0.0], 1.0).is_err());
        assert!(BangBangControl::new(1, vec![0.5, 0.5 + 1e-13], 1.0).is_err());
        assert!(PiecewiseConstantControl::new(vec![0.0, 1.0], vec![1.5]).is_err());
        assert!(PiecewiseConstantControl::new(vec![0.1, 1.0], vec![0.5]).is_err());
        assert!(PiecewiseConstantControl::new(vec![0.0, 1.0], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn arcs_and_durations() {
        let u = ex5();
        assert_eq!(u.durations(), [1.0, 1.0, 1.0, 1.0]);
        let vals: Vec<f64> = u.arcs().iter().map(|a| a.value).collect();
        assert_eq!(vals, [1.0, -1.0, 1.0, -1.0]);
        let c = Control::from(u);
        assert_eq!(c.value_at(0.5), 1.0);
        assert_eq!(c.value_at(1.0), -1.0);
        assert_eq!(c.value_at(4.0), -1.0);
        assert_eq!(c.switch_times(), [1.0, 2.0, 3.0]);
    }

    #[test]
    fn shift_identity_and_rotation() {
        let u = ex5();
        assert_eq!(u.cyclic_shift(0).unwrap(), u);
        let s = u.cyclic_shift(1).unwrap();
        assert_eq!(s.first_sign(), -1);
        assert_eq!(s.switch_times(), [1.0, 2.0, 3.0]);
        assert_eq!(s.horizon(), 4.0);
        assert!(matches!(u.cyclic_shift(4), Err(Error::BadIndex { index: 4, len: 4 })));
    }

    #[test]
    fn two_arc_double_shift_is_identity() {
        let u = BangBangControl::new(1, vec![0.3], 1.0).unwrap();
        let back = u.cyclic_shift(1).unwrap().cyclic_shift(1).unwrap();
        assert_eq!(back.first_sign(), 1);
        assert!((back.switch_times()[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn odd_arc_count_merges_on_shift() {
        // + on (0,1), - on (1,2), + on (2,3): rotating by one puts the two +
        // arcs next to each other
        let u = BangBangControl::new(1, vec![1.0, 2.0], 3.0).unwrap();
        let s = u.cyclic_shift(1).unwrap();
        assert_eq!(s.first_sign(), -1);
        assert_eq!(s.switch_times(), [1.0]);
        assert_eq!(s.durations(), [1.0, 2.0]);
    }

    #[test]
    fn signed_pieces_merge_and_drop() {
        let u = BangBangControl::from_signed_pieces(&[(1, 0.0), (-1, 2.0), (1, 0.0), (-1, 1.0)], 3.0).unwrap();
        assert_eq!(u.first_sign(), -1);
        assert_eq!(u.arc_count(), 1);
        assert!(BangBangControl::from_signed_pieces(&[(1, 0.0)], 1.0).is_err());
    }

    #[test]
    fn periodic_extension_merges_boundary() {
        let u = BangBangControl::new(1, vec![1.0, 2.0], 3.0).unwrap();
        let e = u.periodic_extension(2).unwrap();
        assert_eq!(e.horizon(), 6.0);
        assert_eq!(e.switch_times(), [1.0, 2.0, 4.0, 5.0]);
    }

    #[test]
    fn piecewise_that_is_not_bang_bang() {
        let pc = PiecewiseConstantControl::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5]).unwrap();
        assert!(BangBangControl::try_from(&pc).is_err());
        assert!(Control::from(pc).as_bang_bang().is_none());
        let zero = Control::from(PiecewiseConstantControl::constant(0.0, 2.0).unwrap());
        assert!(zero.is_identically_zero());
    }

    proptest! {
        #[test]
        fn bang_bang_piecewise_round_trip(
            r in prop_oneof![Just(1i8), Just(-1i8)],
            durations in proptest::collection::vec(1e-3f64..2.0, 1..8),
        ) {
            let u = BangBangControl::from_durations(r, &durations).unwrap();
            let pc = u.to_piecewise();
            prop_assert_eq!(BangBangControl::try_from(&pc).unwrap(), u);
        }

        #[test]
        fn full_rotation_of_even_control_restores_it(
            r in prop_oneof![Just(1i8), Just(-1i8)],
            durations in proptest::collection::vec(1e-2f64..2.0, 1..4),
        ) {
            let mut d = durations.clone();
            d.extend_from_slice(&durations);
            let u = BangBangControl::from_durations(r, &d).unwrap();
            let k = u.arc_count();
            let mut s = u.clone();
            for _ in 0..k {
                s = s.cyclic_shift(1).unwrap();
            }
            prop_assert_eq!(s.first_sign(), u.first_sign());
            for (a, b) in s.switch_times().iter().zip(u.switch_times()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

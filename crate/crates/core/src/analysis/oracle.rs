//! Closed-form solution of the scalar plant `ẋ = a x + b u`, `a > 0`, `b ≠ 0`.
//!
//! The reachable set is `[-x₁, x₁]` with `x₁ = (1 − e^{−aT})|b|/a`. From
//! `ξ ≠ 0` the optimal control is `−sgn(b)sgn(ξ)` on `[0, τ)` and zero
//! afterwards, with `τ = −(1/a)·ln(1 − a|ξ|/|b|)`, which is also the value.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::shooting::SwitchingStructure;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Oracle1dParams {
    a: f64,
    b: f64,
    horizon: f64,
}

impl Oracle1dParams {
    pub fn new(a: f64, b: f64, horizon: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "a must be positive, got {a}"
            )));
        }
        if !(b.is_finite() && b != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "b must be nonzero, got {b}"
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "T must be positive, got {horizon}"
            )));
        }
        Ok(Oracle1dParams { a, b, horizon })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Half-width of the reachable interval.
    pub fn x1(&self) -> f64 {
        -(-self.a * self.horizon).exp_m1() * self.b.abs() / self.a
    }

    fn check(&self, xi: f64) -> Result<()> {
        let x1 = self.x1();
        if !xi.is_finite() || xi.abs() > x1 {
            return Err(Error::OutOfReachableSet { xi, x1 });
        }
        Ok(())
    }

    /// Optimal L0 (= L1) cost from `xi`.
    pub fn value(&self, xi: f64) -> Result<f64> {
        self.check(xi)?;
        if xi == 0.0 {
            return Ok(0.0);
        }
        if xi.abs() == self.x1() {
            // the boundary needs full actuation over the whole horizon
            return Ok(self.horizon);
        }
        let v = -(-self.a * xi.abs() / self.b.abs()).ln_1p() / self.a;
        Ok(v.min(self.horizon))
    }

    /// Switching instant; equal to [`Oracle1dParams::value`].
    pub fn tau(&self, xi: f64) -> Result<f64> {
        self.value(xi)
    }

    /// Control level on `[0, τ)`.
    pub fn level(&self, xi: f64) -> Result<i8> {
        self.check(xi)?;
        if xi == 0.0 {
            return Ok(0);
        }
        Ok(-(sign(self.b) * sign(xi)))
    }

    pub fn control(&self, xi: f64) -> Result<SwitchingStructure> {
        let level = self.level(xi)?;
        let tau = self.tau(xi)?;
        if level == 0 {
            return Ok(SwitchingStructure::constant(self.horizon, 0));
        }
        Ok(SwitchingStructure::from_segments(
            self.horizon,
            &[tau],
            &[level, 0],
        ))
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Free-function forms of the three closed-form results.
pub fn oracle1d_reach(p: &Oracle1dParams) -> f64 {
    p.x1()
}

pub fn oracle1d_value(p: &Oracle1dParams, xi: f64) -> Result<f64> {
    p.value(xi)
}

pub fn oracle1d_control(p: &Oracle1dParams, xi: f64) -> Result<SwitchingStructure> {
    p.control(xi)
}

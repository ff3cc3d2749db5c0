//! Optical depth to memory figures of merit.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthBudget<T> {
    /// cm⁻¹
    pub alpha: T,
    /// cm
    pub length: T,
}

impl<T: Real> DepthBudget<T> {
    pub fn new(alpha: T, length: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha.is_finite()) {
            return Err(Error::invalid("memory.alpha_cm1", format!("{alpha} must be ≥ 0")));
        }
        if !(length > T::zero() && length.is_finite()) {
            return Err(Error::invalid("memory.length_cm", format!("{length} must be > 0")));
        }
        Ok(Self { alpha, length })
    }

    pub fn depth(&self) -> T {
        self.alpha * self.length
    }

    pub fn efficiency(&self) -> T {
        gem_efficiency(self.depth())
    }

    pub fn absorbed(&self) -> T {
        absorbed_fraction(self.depth())
    }
}

/// Forward-recall efficiency bound `(1 − e^{−d})²`.
pub fn gem_efficiency<T: Real>(d: T) -> T {
    let a = -(-d).exp_m1();
    a * a
}

/// Depth needed for efficiency `eta`, the inverse of [`gem_efficiency`].
pub fn required_depth<T: Real>(eta: T) -> Result<T> {
    if !(eta >= T::zero() && eta < T::one()) {
        return Err(Error::invalid(
            "memory.target_efficiency",
            format!("{eta} must lie in [0, 1)"),
        ));
    }
    Ok(-(-eta.sqrt()).ln_1p())
}

fn absorbed_fraction<T: Real>(d: T) -> T {
    -(-d).exp_m1()
}

/// Fraction of light absorbed over `length` cm at absorption coefficient
/// `alpha` cm⁻¹.
pub fn absorption_over_length<T: Real>(alpha: T, length: T) -> Result<T> {
    Ok(DepthBudget::new(alpha, length)?.absorbed())
}

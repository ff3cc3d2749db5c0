use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::vec3::{self, Vec3};
use crate::num::Real;

pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
pub const PLANCK: f64 = 6.626_070_15e-34;
/// arccos(1/√3) in radians.
pub const MAGIC_ANGLE: f64 = 0.955_316_618_124_509_3;
/// Ratio of static to transition dipole coupling as usually quoted for this
/// material; the default dipoles give 39.06.
pub const QUOTED_DIPOLE_RATIO: f64 = 42.0;

const OVERRIDE_TOL: f64 = 1e-3;

/// Measured shift for every neighbor at `distance` Å, replacing the
/// dipolar estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellOverride<T> {
    pub distance: T,
    /// Signed shift, MHz.
    pub shift: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionModel<T> {
    /// Static dipole difference between ground and excited state, C·m.
    pub d_static: T,
    /// Transition dipole, C·m.
    pub d_trans: T,
    pub overrides: Vec<ShellOverride<T>>,
    /// Bound on the off-diagonal (flip-flop) coupling, MHz. Reported only.
    pub t_max: T,
}

impl<T: Real> Default for InteractionModel<T> {
    fn default() -> Self {
        Self {
            d_static: T::lit(1.0e-32),
            d_trans: T::lit(1.6e-33),
            overrides: Vec::new(),
            t_max: T::lit(5.0),
        }
    }
}

impl<T: Real> InteractionModel<T> {
    pub fn new(d_static: T, d_trans: T, overrides: Vec<ShellOverride<T>>) -> Result<Self> {
        let m = Self {
            d_static,
            d_trans,
            overrides,
            ..Self::default()
        };
        m.validate()?;
        Ok(m)
    }

    /// No far field and no overrides.
    pub fn non_interacting() -> Self {
        Self {
            d_static: T::zero(),
            ..Self::default()
        }
    }

    pub fn with_overrides(mut self, overrides: Vec<ShellOverride<T>>) -> Result<Self> {
        self.overrides = overrides;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        // d_static = 0 switches the far field off
        if !(self.d_static >= T::zero() && self.d_static.is_finite()) {
            return Err(Error::invalid(
                "blockade.d_static",
                format!("{} must be ≥ 0", self.d_static),
            ));
        }
        if !(self.d_trans > T::zero() && self.d_trans.is_finite()) {
            return Err(Error::invalid(
                "blockade.d_trans",
                format!("{} must be > 0", self.d_trans),
            ));
        }
        if !(self.t_max >= T::zero()) {
            return Err(Error::invalid("blockade.t_max", "must be ≥ 0"));
        }
        for (k, o) in self.overrides.iter().enumerate() {
            if !(o.distance > T::zero() && o.shift.is_finite()) {
                return Err(Error::invalid(
                    format!("blockade.overrides[{k}]"),
                    "distance must be > 0 and shift finite",
                ));
            }
            for p in &self.overrides[..k] {
                if (p.distance - o.distance).abs() <= T::lit(OVERRIDE_TOL) {
                    return Err(Error::invalid(
                        format!("blockade.overrides[{k}]"),
                        format!("distance {} duplicates {}", o.distance, p.distance),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `d_static² / (4π ε₀ h)` expressed in MHz·Å³. Evaluated in f64 since
    /// the squared dipole underflows single precision.
    pub fn coupling_constant(&self) -> T {
        let d = self.d_static.to_f64_lossy();
        let hz_m3 = d * d / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY * PLANCK);
        T::lit(hz_m3 * 1e-6 * 1e30)
    }

    /// Dipolar far field in MHz at `r` Å and angle `theta` to the C2 axis.
    pub fn far_field(&self, r: T, theta: T) -> T {
        let c = theta.cos();
        self.coupling_constant() / (r * r * r) * (T::one() - T::lit(3.0) * c * c)
    }

    pub fn override_at(&self, r: T) -> Option<T> {
        self.overrides
            .iter()
            .find(|o| (o.distance - r).abs() <= T::lit(OVERRIDE_TOL))
            .map(|o| o.shift)
    }

    /// Frequency shift (MHz) of an ion when a neighbor at distance `r` Å and
    /// angle `theta` is excited.
    pub fn diagonal_shift(&self, r: T, theta: T) -> T {
        self.override_at(r).unwrap_or_else(|| self.far_field(r, theta))
    }

    /// Shift for a displacement vector (Å) relative to a unit `axis`.
    pub fn shift_for(&self, displacement: Vec3<T>, axis: Vec3<T>) -> T {
        let r = vec3::norm(displacement);
        let cos = (vec3::dot(displacement, axis) / r).max(-T::one()).min(T::one());
        self.diagonal_shift(r, cos.acos())
    }

    pub fn dipole_ratio(&self) -> T {
        let r = self.d_static / self.d_trans;
        r * r
    }

    /// Distance (Å) at which the far field falls to `threshold` MHz.
    pub fn blockade_radius(&self, threshold: T, theta: T) -> Result<T> {
        if !(threshold > T::zero()) {
            return Err(Error::invalid("threshold", format!("{threshold} must be > 0")));
        }
        let c = theta.cos();
        let angular = (T::one() - T::lit(3.0) * c * c).abs();
        if angular <= T::lit(1e-12).max(T::lit(16.0) * T::epsilon()) {
            return Err(Error::MagicAngle);
        }
        if self.d_static == T::zero() {
            return Err(Error::invalid("blockade.d_static", "no far field to invert"));
        }
        Ok((self.coupling_constant() * angular / threshold).cbrt())
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LineShapeKind<T> {
    Gaussian,
    Lorentzian,
    /// `eta · Lorentzian + (1 − eta) · Gaussian` with a shared FWHM.
    PseudoVoigt {
        eta: T,
    },
}

impl<T: Real> LineShapeKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            LineShapeKind::Gaussian => "gaussian",
            LineShapeKind::Lorentzian => "lorentzian",
            LineShapeKind::PseudoVoigt { .. } => "pseudo-voigt",
        }
    }

    /// Weight of the Lorentzian component.
    fn eta(&self) -> T {
        match *self {
            LineShapeKind::Gaussian => T::zero(),
            LineShapeKind::Lorentzian => T::one(),
            LineShapeKind::PseudoVoigt { eta } => eta,
        }
    }
}

/// Unit-area profile with the given full width at half maximum (MHz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineShape<T> {
    #[serde(flatten)]
    pub kind: LineShapeKind<T>,
    pub fwhm: T,
}

fn four_ln2<T: Real>() -> T {
    T::lit(4.0) * T::LN_2()
}

impl<T: Real> LineShape<T> {
    pub fn new(kind: LineShapeKind<T>, fwhm: T) -> Result<Self> {
        if !(fwhm > T::zero() && fwhm.is_finite()) {
            return Err(Error::invalid("lineshape.fwhm_mhz", format!("{fwhm} must be > 0")));
        }
        if let LineShapeKind::PseudoVoigt { eta } = kind {
            if !(eta >= T::zero() && eta <= T::one()) {
                return Err(Error::invalid("lineshape.eta", format!("{eta} outside [0, 1]")));
            }
        }
        Ok(Self { kind, fwhm })
    }

    pub fn lorentzian(fwhm: T) -> Result<Self> {
        Self::new(LineShapeKind::Lorentzian, fwhm)
    }

    pub fn gaussian(fwhm: T) -> Result<Self> {
        Self::new(LineShapeKind::Gaussian, fwhm)
    }

    pub fn with_fwhm(&self, fwhm: T) -> Result<Self> {
        Self::new(self.kind, fwhm)
    }

    /// Profile value at offset `x` from line center.
    pub fn eval(&self, x: T) -> T {
        eval_parts(self.kind.eta(), x, self.fwhm).0
    }

    /// Value at line center.
    pub fn peak(&self) -> T {
        self.eval(T::zero())
    }

    /// Cumulative distribution, i.e. the profile area below `x`.
    pub fn cdf(&self, x: T) -> T {
        let eta = self.kind.eta();
        let half = T::lit(0.5);
        let lor = half + (T::lit(2.0) * x / self.fwhm).atan() / T::PI();
        let gau = half * (T::one() + (four_ln2::<T>().sqrt() * x / self.fwhm).erf());
        eta * lor + (T::one() - eta) * gau
    }

    /// Value and derivatives with respect to the offset and the FWHM.
    pub(crate) fn eval_with_derivatives(&self, x: T) -> (T, T, T) {
        eval_parts(self.kind.eta(), x, self.fwhm)
    }
}

fn eval_parts<T: Real>(eta: T, u: T, w: T) -> (T, T, T) {
    let two = T::lit(2.0);
    let mut s = T::zero();
    let mut ds_du = T::zero();
    let mut ds_dw = T::zero();
    if eta > T::zero() {
        let d = w * w + T::lit(4.0) * u * u;
        let l = two * w / (T::PI() * d);
        let dl_du = -T::lit(16.0) * w * u / (T::PI() * d * d);
        let dl_dw = two * (T::lit(4.0) * u * u - w * w) / (T::PI() * d * d);
        s += eta * l;
        ds_du += eta * dl_du;
        ds_dw += eta * dl_dw;
    }
    if eta < T::one() {
        let a = four_ln2::<T>();
        let k = (a / T::PI()).sqrt();
        let g = k / w * (-a * u * u / (w * w)).exp();
        let dg_du = g * (-two * a * u / (w * w));
        let dg_dw = g * (-T::one() / w + two * a * u * u / (w * w * w));
        let c = T::one() - eta;
        s += c * g;
        ds_du += c * dg_du;
        ds_dw += c * dg_dw;
    }
    (s, ds_du, ds_dw)
}

//! Additive isotope-disorder broadening model.
//!
//! Each non-dominant isotope contributes
//!
//! ```text
//! K · (Δm / m_sub) · (n_element / n_H) · abundance[%]
//! ```
//!
//! where `K` is fixed by the measured deuterium rate: evaluated on D
//! substituting for H the model must return the calibration rate, so
//! `K = R_D / (Δm/m)_D`. With mass numbers `(Δm/m)_D = 1/2` and `K = 182 MHz/%`
//! for the default 91 MHz/% calibration.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::composition::{CrystalComposition, Element};
use crate::error::{Error, Result};
use crate::num::Real;

/// Hydrogen sites per formula unit; the normalization for site counts.
const HYDROGEN_SITES: u32 = 12;
const H1_MASS: f64 = 1.007_825_032;
const H2_MASS: f64 = 2.014_101_778;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombinationRule {
    #[default]
    Linear,
    Quadrature,
}

/// Which mass enters the relative mass difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassConvention {
    #[default]
    MassNumber,
    AtomicMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BroadeningModel<T> {
    /// Measured broadening per percent deuteration, MHz/%.
    pub deuterium_rate: T,
    pub rule: CombinationRule,
    pub masses: MassConvention,
}

impl<T: Real> Default for BroadeningModel<T> {
    fn default() -> Self {
        Self {
            deuterium_rate: T::lit(91.0),
            rule: CombinationRule::Linear,
            masses: MassConvention::MassNumber,
        }
    }
}

impl<T: Real> BroadeningModel<T> {
    pub fn new(deuterium_rate: T, rule: CombinationRule, masses: MassConvention) -> Result<Self> {
        if !(deuterium_rate > T::zero()) {
            return Err(Error::invalid(
                "broadening.deuterium_rate",
                format!("{deuterium_rate} must be > 0"),
            ));
        }
        Ok(Self {
            deuterium_rate,
            rule,
            masses,
        })
    }

    /// Relative mass difference of D substituting for H.
    pub fn calibration_mass_factor(&self) -> T {
        match self.masses {
            MassConvention::MassNumber => T::lit(0.5),
            MassConvention::AtomicMass => T::lit((H2_MASS - H1_MASS) / H2_MASS),
        }
    }

    /// Master coefficient `K` in MHz per percent per unit relative mass
    /// difference.
    pub fn master_coefficient(&self) -> T {
        self.deuterium_rate / self.calibration_mass_factor()
    }

    fn mass_factor(&self, c: &CrystalComposition<T>, element: Element, mass_number: u32) -> Result<T> {
        let dominant = c.dominant(element)?;
        let iso = c.isotope(element, mass_number)?;
        Ok(match self.masses {
            MassConvention::MassNumber => {
                let sub = T::from_u32(iso.mass_number).unwrap();
                let dom = T::from_u32(dominant.mass_number).unwrap();
                (sub - dom).abs() / sub
            }
            MassConvention::AtomicMass => (iso.mass - dominant.mass).abs() / iso.mass,
        })
    }

    /// Broadening (MHz) contributed by one non-dominant isotope.
    pub fn isotope_contribution(&self, c: &CrystalComposition<T>, element: Element, mass_number: u32) -> Result<T> {
        let iso = c.isotope(element, mass_number)?;
        if c.dominant(element)?.mass_number == mass_number {
            return Err(Error::DominantIsotope {
                element: element.to_string(),
                mass_number,
            });
        }
        let sites = T::from_u32(c.site_count(element)).unwrap() / T::from_u32(HYDROGEN_SITES).unwrap();
        Ok(self.master_coefficient() * self.mass_factor(c, element, mass_number)? * sites * iso.percent())
    }

    /// Sum of contributions from every non-dominant isotope of one element.
    pub fn element_contribution(&self, c: &CrystalComposition<T>, element: Element) -> Result<T> {
        let dom = c.dominant(element)?.mass_number;
        c.isotopes(element)
            .iter()
            .filter(|i| i.mass_number != dom)
            .try_fold(T::zero(), |s, i| {
                Ok(s + self.isotope_contribution(c, element, i.mass_number)?)
            })
    }

    pub fn combine(&self, parts: impl IntoIterator<Item = T>, base: T) -> T {
        match self.rule {
            CombinationRule::Linear => parts.into_iter().fold(base, |s, x| s + x),
            CombinationRule::Quadrature => parts.into_iter().fold(base * base, |s, x| s + x * x).sqrt(),
        }
    }

    pub fn total_linewidth(&self, c: &CrystalComposition<T>, base: T) -> Result<BroadeningReport<T>> {
        if !(base >= T::zero()) {
            return Err(Error::invalid("base", format!("{base} must be ≥ 0")));
        }
        let mut contributions = Vec::new();
        for element in Element::ALL {
            let dom = c.dominant(element)?.mass_number;
            for iso in c.isotopes(element) {
                if iso.mass_number == dom {
                    continue;
                }
                contributions.push(Contribution {
                    element,
                    mass_number: iso.mass_number,
                    mhz: self.isotope_contribution(c, element, iso.mass_number)?,
                });
            }
        }
        let total = self.combine(contributions.iter().map(|c| c.mhz), base);
        Ok(BroadeningReport {
            rule: self.rule,
            contributions,
            base,
            total,
        })
    }

    /// Residual broadening from `element` as the chosen isotope is enriched
    /// over `purities`.
    pub fn broadening_vs_purity(
        &self,
        c: &CrystalComposition<T>,
        element: Element,
        mass_number: u32,
        purities: &[T],
    ) -> Result<Vec<PurityPoint<T>>> {
        if purities.is_empty() {
            return Err(Error::Empty("purity grid"));
        }
        purities
            .iter()
            .map(|&p| {
                let purified = c.purify(element, mass_number, p)?;
                Ok(PurityPoint {
                    purity: p,
                    mhz: self.element_contribution(&purified, element)?,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contribution<T> {
    pub element: Element,
    pub mass_number: u32,
    pub mhz: T,
}

impl<T> Contribution<T> {
    /// Short key such as `cl37`.
    pub fn key(&self) -> String {
        format!("{}{}", self.element.symbol().to_lowercase(), self.mass_number)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BroadeningReport<T> {
    pub rule: CombinationRule,
    pub contributions: Vec<Contribution<T>>,
    /// Non-isotopic floor, MHz.
    pub base: T,
    pub total: T,
}

impl<T: Real> BroadeningReport<T> {
    pub fn get(&self, element: Element, mass_number: u32) -> Option<T> {
        self.contributions
            .iter()
            .find(|c| c.element == element && c.mass_number == mass_number)
            .map(|c| c.mhz)
    }

    /// Linear sum of contributions per element.
    pub fn element_total(&self, element: Element) -> T {
        self.contributions
            .iter()
            .filter(|c| c.element == element)
            .fold(T::zero(), |s, c| s + c.mhz)
    }

    pub fn largest(&self) -> Option<&Contribution<T>> {
        self.contributions
            .iter()
            .max_by(|a, b| a.mhz.partial_cmp(&b.mhz).expect("finite contributions"))
    }

    /// Flat key/value view: per-isotope entries (`cl37`), per-element totals
    /// (`cl_total`), `base_mhz` and `total_mhz`.
    pub fn flat(&self) -> BTreeMap<String, T> {
        let mut out = BTreeMap::new();
        for c in &self.contributions {
            out.insert(c.key(), c.mhz);
        }
        for e in Element::ALL {
            out.insert(format!("{}_total", e.symbol().to_lowercase()), self.element_total(e));
        }
        out.insert("base_mhz".into(), self.base);
        out.insert("total_mhz".into(), self.total);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PurityPoint<T> {
    pub purity: T,
    pub mhz: T,
}

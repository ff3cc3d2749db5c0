//! Models for stoichiometric EuCl3·6H2O: isotope line broadening, hyperfine
//! excitation spectra, optical pumping into a single hyperfine level, and
//! excitation blockade from ion-ion frequency shifts.
//!
//! The numerical core is generic over [`num::Real`] (`f32` or `f64`); the
//! aliases at the crate root and in [`single`] fix the scalar type. Lattice
//! Monte Carlo in [`interactions`] runs in `f64` only.

// `!(x > 0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod broadening;
pub mod cli;
pub mod composition;
pub mod error;
pub mod holeburn;
pub mod interactions;
pub mod levels;
pub mod linalg;
pub mod memory;
pub mod num;
pub mod spectrum;

pub use error::{Error, Result};

pub type Isotope = composition::Isotope<f64>;
pub type CrystalComposition = composition::CrystalComposition<f64>;
pub type LatticeGeometry = composition::LatticeGeometry<f64>;
pub type BroadeningModel = broadening::BroadeningModel<f64>;
pub type BroadeningReport = broadening::BroadeningReport<f64>;
pub type LevelScheme = levels::LevelScheme<f64>;
pub type IsotopeLevelSet = levels::IsotopeLevelSet<f64>;
pub type TransitionTable = levels::TransitionTable<f64>;
pub type LineShape = spectrum::LineShape<f64>;
pub type FrequencyGrid = spectrum::FrequencyGrid<f64>;
pub type Spectrum = spectrum::Spectrum<f64>;
pub type PumpScenario = holeburn::PumpScenario<f64>;
pub type ClassEnsemble = holeburn::ClassEnsemble<f64>;
pub type ClassState = holeburn::ClassState<f64>;
pub type InteractionModel = interactions::InteractionModel<f64>;
pub type DepthBudget = memory::DepthBudget<f64>;

/// The same aliases in single precision.
pub mod single {
    use super::*;

    pub type Isotope = composition::Isotope<f32>;
    pub type CrystalComposition = composition::CrystalComposition<f32>;
    pub type LatticeGeometry = composition::LatticeGeometry<f32>;
    pub type BroadeningModel = broadening::BroadeningModel<f32>;
    pub type BroadeningReport = broadening::BroadeningReport<f32>;
    pub type LevelScheme = levels::LevelScheme<f32>;
    pub type IsotopeLevelSet = levels::IsotopeLevelSet<f32>;
    pub type TransitionTable = levels::TransitionTable<f32>;
    pub type LineShape = spectrum::LineShape<f32>;
    pub type FrequencyGrid = spectrum::FrequencyGrid<f32>;
    pub type Spectrum = spectrum::Spectrum<f32>;
    pub type PumpScenario = holeburn::PumpScenario<f32>;
    pub type ClassEnsemble = holeburn::ClassEnsemble<f32>;
    pub type ClassState = holeburn::ClassState<f32>;
    pub type InteractionModel = interactions::InteractionModel<f32>;
    pub type DepthBudget = memory::DepthBudget<f32>;
}

//! Excitation-induced frequency shifts between Eu ions and lattice Monte
//! Carlo of the resulting blockade.

pub mod kmc;
mod lattice;
mod model;
mod observables;

pub use kmc::{
    excitation_statistics, non_interacting_fraction, simulate_excitation, single_ion_excited, Drive, Event, EventKind,
    ExcitationStats, KmcConfig, Trajectory,
};
pub use lattice::{DetuningModel, Lattice};
pub use model::{InteractionModel, ShellOverride, MAGIC_ANGLE, PLANCK, QUOTED_DIPOLE_RATIO, VACUUM_PERMITTIVITY};
pub use observables::{
    density_curve_csv, linewidth_vs_excited_density, probe_absorption, pump_probe_spectrum, DensityPoint,
    DifferenceSpectrum, PumpProbe,
};

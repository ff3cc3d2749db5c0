//! Rate-based kinetic Monte Carlo of driven, interacting two-level ions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Lattice;

/// Optical drive applied to every site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    /// Laser frequency relative to the unshifted line, MHz.
    pub frequency: f64,
    /// Excitation rate of a resonant ion, s⁻¹.
    pub rate: f64,
    /// s.
    pub duration: f64,
}

impl Drive {
    pub fn validate(&self) -> Result<()> {
        if !self.frequency.is_finite() {
            return Err(Error::invalid("drive.frequency_mhz", "must be finite"));
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::invalid("drive.rate", format!("{} must be ≥ 0", self.rate)));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid(
                "drive.duration_s",
                format!("{} must be ≥ 0", self.duration),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmcConfig {
    /// Homogeneous FWHM (MHz) of the excitation response.
    pub homogeneous_fwhm: f64,
    /// Excited-state lifetime, s.
    pub t1: f64,
    /// Keep a log of every shift change (can be large).
    pub record_shifts: bool,
}

impl Default for KmcConfig {
    fn default() -> Self {
        Self {
            homogeneous_fwhm: 1.0,
            t1: 2e-3,
            record_shifts: false,
        }
    }
}

impl KmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.homogeneous_fwhm > 0.0 && self.homogeneous_fwhm.is_finite()) {
            return Err(Error::invalid("blockade.homogeneous_fwhm_mhz", "must be > 0"));
        }
        if !(self.t1 > 0.0 && self.t1.is_finite()) {
            return Err(Error::invalid("blockade.t1", "must be > 0"));
        }
        Ok(())
    }

    /// Excitation rate of a ground ion detuned by `detuning` MHz from the
    /// drive (peak-normalized Lorentzian response).
    pub fn excitation_rate(&self, drive: &Drive, detuning: f64) -> f64 {
        let x = 2.0 * detuning / self.homogeneous_fwhm;
        drive.rate / (1.0 + x * x)
    }

    pub fn decay_rate(&self) -> f64 {
        1.0 / self.t1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Excitation,
    Decay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub site: usize,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    /// Time-ordered.
    pub events: Vec<Event>,
    pub excited: Vec<bool>,
    /// Current total shift of each site from its excited neighbors, MHz.
    pub shifts: Vec<f64>,
    /// `(t, site, shift)` after every change, when recording is enabled.
    pub shift_log: Vec<(f64, usize, f64)>,
    pub duration: f64,
}

impl Trajectory {
    pub fn excited_fraction(&self) -> f64 {
        self.excited.iter().filter(|&&e| e).count() as f64 / self.excited.len() as f64
    }

    pub fn excited_sites(&self) -> Vec<usize> {
        (0..self.excited.len()).filter(|&i| self.excited[i]).collect()
    }

    /// CSV with header `t,site,event`.
    pub fn events_csv(&self) -> String {
        let mut out = String::from("t,site,event\n");
        for e in &self.events {
            let kind = match e.kind {
                EventKind::Excitation => "excitation",
                EventKind::Decay => "decay",
            };
            out.push_str(&format!("{},{},{}\n", e.t, e.site, kind));
        }
        out
    }
}

/// Complete binary tree of partial sums for O(log n) rate updates and
/// event selection.
struct SumTree {
    size: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    fn new(n: usize) -> Self {
        let size = n.next_power_of_two();
        Self {
            size,
            nodes: vec![0.0; 2 * size],
        }
    }

    fn set(&mut self, i: usize, v: f64) {
        let mut k = i + self.size;
        self.nodes[k] = v;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    fn total(&self) -> f64 {
        self.nodes[1]
    }

    /// Leaf whose cumulative range contains `u ∈ [0, total)`.
    fn find(&self, mut u: f64) -> usize {
        let mut k = 1;
        while k < self.size {
            let left = self.nodes[2 * k];
            if u < left || self.nodes[2 * k + 1] <= 0.0 {
                k *= 2;
            } else {
                u -= left;
                k = 2 * k + 1;
            }
        }
        k - self.size
    }
}

/// One Gillespie trajectory from the all-ground state.
pub fn simulate_excitation(lattice: &Lattice, config: &KmcConfig, drive: &Drive, seed: u64) -> Result<Trajectory> {
    config.validate()?;
    drive.validate()?;
    let n = lattice.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut excited = vec![false; n];
    let mut shifts = vec![0.0; n];
    let mut tree = SumTree::new(n);
    let gamma = config.decay_rate();
    let rate_of = |site: usize, excited: &[bool], shifts: &[f64]| {
        if excited[site] {
            gamma
        } else {
            config.excitation_rate(drive, lattice.detunings()[site] + shifts[site] - drive.frequency)
        }
    };
    for i in 0..n {
        tree.set(i, rate_of(i, &excited, &shifts));
    }
    let mut events = Vec::new();
    let mut shift_log = Vec::new();
    let mut t = 0.0;
    loop {
        let total = tree.total();
        if total <= 0.0 {
            break;
        }
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / total;
        if t > drive.duration {
            break;
        }
        let site = tree.find(rng.random::<f64>() * total);
        let now_excited = !excited[site];
        excited[site] = now_excited;
        events.push(Event {
            t,
            site,
            kind: if now_excited {
                EventKind::Excitation
            } else {
                EventKind::Decay
            },
        });
        tree.set(site, rate_of(site, &excited, &shifts));
        let sign = if now_excited { 1.0 } else { -1.0 };
        for &(j, v) in lattice.neighbors(site) {
            shifts[j] += sign * v;
            if config.record_shifts {
                shift_log.push((t, j, shifts[j]));
            }
            if !excited[j] {
                tree.set(j, rate_of(j, &excited, &shifts));
            }
        }
    }
    Ok(Trajectory {
        events,
        excited,
        shifts,
        shift_log,
        duration: drive.duration,
    })
}

/// SplitMix64 step; used to derive independent seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trajectory `k` in an ensemble started from `seed`.
pub fn trajectory_seed(seed: u64, k: usize) -> u64 {
    splitmix64(seed ^ splitmix64(k as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcitationStats {
    pub trajectories: usize,
    /// Mean excited fraction at the end of the drive.
    pub mean: f64,
    /// Standard error of `mean`.
    pub std_error: f64,
}

impl ExcitationStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            trajectories: samples.len(),
            mean,
            std_error: (var / n).sqrt(),
        }
    }
}

/// Runs `trajectories` independent trajectories in parallel and averages the
/// final excited fraction. Results do not depend on thread count.
pub fn excitation_statistics(
    lattice: &Lattice,
    config: &KmcConfig,
    drive: &Drive,
    seed: u64,
    trajectories: usize,
) -> Result<ExcitationStats> {
    if trajectories == 0 {
        return Err(Error::invalid("blockade.trajectories", "must be ≥ 1"));
    }
    let samples: Vec<f64> = (0..trajectories)
        .into_par_iter()
        .map(|k| simulate_excitation(lattice, config, drive, trajectory_seed(seed, k)).map(|t| t.excited_fraction()))
        .collect::<Result<_>>()?;
    Ok(ExcitationStats::from_samples(&samples))
}

/// Excited probability at time `t` of an isolated ion pumped at rate `k`
/// and decaying at rate `gamma`, starting in the ground state.
pub fn single_ion_excited(k: f64, gamma: f64, t: f64) -> f64 {
    let s = k + gamma;
    if s == 0.0 {
        return 0.0;
    }
    k / s * (1.0 - (-s * t).exp())
}

/// Independent-ion expectation of the excited fraction for this lattice.
pub fn non_interacting_fraction(lattice: &Lattice, config: &KmcConfig, drive: &Drive) -> f64 {
    let gamma = config.decay_rate();
    let total: f64 = lattice
        .detunings()
        .iter()
        .map(|&d| {
            single_ion_excited(
                config.excitation_rate(drive, d - drive.frequency),
                gamma,
                drive.duration,
            )
        })
        .sum();
    total / lattice.len() as f64
}

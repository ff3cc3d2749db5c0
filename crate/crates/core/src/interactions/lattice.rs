use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::composition::LatticeGeometry;
use crate::error::{Error, Result};
use crate::num::vec3::{self, Vec3};

use super::InteractionModel;

/// Distribution of static per-site detunings (MHz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DetuningModel {
    /// Every site exactly on resonance.
    None,
    Gaussian {
        fwhm: f64,
    },
    Lorentzian {
        fwhm: f64,
    },
}

impl DetuningModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DetuningModel::None => Ok(()),
            DetuningModel::Gaussian { fwhm } | DetuningModel::Lorentzian { fwhm } => {
                if fwhm > 0.0 && fwhm.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("blockade.detuning.fwhm", format!("{fwhm} must be > 0")))
                }
            }
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(match *self {
            DetuningModel::None => vec![0.0; n],
            DetuningModel::Gaussian { fwhm } => {
                let sigma = fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
                let d = Normal::new(0.0, sigma).map_err(|e| Error::invalid("blockade.detuning", e.to_string()))?;
                (0..n).map(|_| d.sample(&mut rng)).collect()
            }
            DetuningModel::Lorentzian { fwhm } => {
                let d = Cauchy::new(0.0, fwhm / 2.0).map_err(|e| Error::invalid("blockade.detuning", e.to_string()))?;
                (0..n).map(|_| d.sample(&mut rng)).collect()
            }
        })
    }
}

/// Fixed set of Eu sites with their pairwise excitation-induced shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    positions: Vec<Vec3<f64>>,
    detunings: Vec<f64>,
    /// `neighbors[i]` lists `(j, V)`: site i moves by V MHz while j is excited.
    neighbors: Vec<Vec<(usize, f64)>>,
    /// Seed the detunings were drawn from, if sampled.
    pub detuning_seed: Option<u64>,
}

impl Lattice {
    /// `reps` copies of the unit cell with periodic boundaries. Pairs interact
    /// up to `cutoff` Å through their minimum image.
    pub fn supercell(
        geometry: &LatticeGeometry<f64>,
        reps: [usize; 3],
        model: &InteractionModel<f64>,
        cutoff: f64,
        detuning: DetuningModel,
        seed: u64,
    ) -> Result<Self> {
        geometry.validate()?;
        model.validate()?;
        if !(cutoff > 0.0) {
            return Err(Error::invalid(
                "blockade.cutoff_angstrom",
                format!("{cutoff} must be > 0"),
            ));
        }
        if reps.contains(&0) {
            return Err(Error::invalid("blockade.supercell", "repetitions must be ≥ 1"));
        }
        let spacings = geometry.plane_spacings();
        for (axis, (&h, &n)) in spacings.iter().zip(&reps).enumerate() {
            let width = h * n as f64;
            if width < 2.0 * cutoff {
                return Err(Error::invalid(
                    "blockade.supercell",
                    format!("axis {axis}: width {width:.3} Å is below twice the cutoff ({cutoff} Å)"),
                ));
            }
        }
        let basis = [0, 1, 2].map(|k| vec3::scale(geometry.basis[k], reps[k] as f64));
        let mut frac = Vec::new();
        for i in 0..reps[0] {
            for j in 0..reps[1] {
                for k in 0..reps[2] {
                    for s in &geometry.eu_sites {
                        frac.push([
                            (s[0] + i as f64) / reps[0] as f64,
                            (s[1] + j as f64) / reps[1] as f64,
                            (s[2] + k as f64) / reps[2] as f64,
                        ]);
                    }
                }
            }
        }
        let n = frac.len();
        let axis = geometry.c2_axis;
        let mut neighbors = vec![Vec::new(); n];
        for a in 0..n {
            for b in a + 1..n {
                let mut df = vec3::sub(frac[b], frac[a]);
                for c in &mut df {
                    *c -= c.round();
                }
                let mut v = 0.0;
                let mut hit = false;
                for ii in -1..=1 {
                    for jj in -1..=1 {
                        for kk in -1..=1 {
                            let f = [df[0] + ii as f64, df[1] + jj as f64, df[2] + kk as f64];
                            let d = vec3::frac_to_cart(&basis, f);
                            let r = vec3::norm(d);
                            if r <= cutoff {
                                v += pair_shift(model, d, axis);
                                hit = true;
                            }
                        }
                    }
                }
                if hit {
                    neighbors[a].push((b, v));
                    neighbors[b].push((a, v));
                }
            }
        }
        let positions = frac.iter().map(|&f| vec3::frac_to_cart(&basis, f)).collect();
        let detunings = detuning.sample(n, seed)?;
        Ok(Self {
            positions,
            detunings,
            neighbors,
            detuning_seed: Some(seed),
        })
    }

    /// Finite cluster without periodic images; every pair interacts.
    pub fn cluster(
        positions: Vec<Vec3<f64>>,
        axis: Vec3<f64>,
        model: &InteractionModel<f64>,
        detunings: Vec<f64>,
    ) -> Result<Self> {
        model.validate()?;
        if positions.is_empty() {
            return Err(Error::Empty("lattice sites"));
        }
        if detunings.len() != positions.len() {
            return Err(Error::invalid("detunings", "one detuning per site is required"));
        }
        if (vec3::norm(axis) - 1.0).abs() > 1e-6 {
            return Err(Error::invalid("c2_axis", "not a unit vector"));
        }
        let n = positions.len();
        let mut neighbors = vec![Vec::new(); n];
        for a in 0..n {
            for b in a + 1..n {
                let d = vec3::sub(positions[b], positions[a]);
                if vec3::norm(d) < 1e-9 {
                    return Err(Error::invalid("positions", format!("sites {a} and {b} coincide")));
                }
                let v = pair_shift(model, d, axis);
                neighbors[a].push((b, v));
                neighbors[b].push((a, v));
            }
        }
        Ok(Self {
            positions,
            detunings,
            neighbors,
            detuning_seed: None,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3<f64>] {
        &self.positions
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    pub fn neighbors(&self, site: usize) -> &[(usize, f64)] {
        &self.neighbors[site]
    }

    /// Shift of `site` when `other` is excited (0 outside the cutoff).
    pub fn pair_shift(&self, site: usize, other: usize) -> f64 {
        self.neighbors[site]
            .iter()
            .find(|(j, _)| *j == other)
            .map_or(0.0, |&(_, v)| v)
    }

    pub fn with_detunings(&self, detunings: Vec<f64>) -> Result<Self> {
        if detunings.len() != self.len() {
            return Err(Error::invalid("detunings", "one detuning per site is required"));
        }
        Ok(Self {
            detunings,
            detuning_seed: None,
            ..self.clone()
        })
    }

    pub fn resampled(&self, model: DetuningModel, seed: u64) -> Result<Self> {
        Ok(Self {
            detunings: model.sample(self.len(), seed)?,
            detuning_seed: Some(seed),
            ..self.clone()
        })
    }
}

/// Evaluates the pair from both ends and checks they agree before storing
/// one value for both.
fn pair_shift(model: &InteractionModel<f64>, d: Vec3<f64>, axis: Vec3<f64>) -> f64 {
    let forward = model.shift_for(d, axis);
    let backward = model.shift_for(vec3::scale(d, -1.0), axis);
    assert!(
        (forward - backward).abs() <= 1e-9 * forward.abs().max(1e-12),
        "asymmetric pair shift {forward} vs {backward}"
    );
    forward
}

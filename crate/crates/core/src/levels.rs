//! Hyperfine level schemes of the 7F0 and 5D0 manifolds and the nine-line
//! transition table they generate.
//!
//! Each manifold of an I = 5/2 Eu ion has three doubly degenerate levels. The
//! degeneracy is absorbed into the transition strengths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Manifold {
    Ground,
    Excited,
}

impl Manifold {
    pub fn label(self) -> &'static str {
        match self {
            Manifold::Ground => "ground",
            Manifold::Excited => "excited",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelScheme<T> {
    pub manifold: Manifold,
    /// Level energies in MHz, ascending, lowest at zero.
    energies: [T; 3],
}

impl<T: Real> LevelScheme<T> {
    pub fn new(manifold: Manifold, energies: [T; 3]) -> Result<Self> {
        if energies[0] != T::zero() {
            return Err(Error::invalid(
                format!("{}.energies", manifold.label()),
                "lowest level must be at 0 MHz",
            ));
        }
        if !(energies[1] >= energies[0] && energies[2] >= energies[1]) {
            return Err(Error::invalid(
                format!("{}.energies", manifold.label()),
                "levels must be sorted ascending",
            ));
        }
        Ok(Self { manifold, energies })
    }

    /// Builds a scheme from the two adjacent splittings.
    pub fn from_splittings(manifold: Manifold, lower: T, upper: T) -> Result<Self> {
        Self::new(manifold, [T::zero(), lower, lower + upper])
    }

    pub fn energies(&self) -> [T; 3] {
        self.energies
    }

    pub fn energy(&self, level: usize) -> T {
        self.energies[level]
    }

    /// Splittings `E2 − E1`, `E3 − E2`, `E3 − E1`.
    pub fn splittings(&self) -> [T; 3] {
        let e = self.energies;
        [e[1] - e[0], e[2] - e[1], e[2] - e[0]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsotopeLevelSet<T> {
    /// Eu mass number, 151 or 153.
    pub isotope: u32,
    pub ground: LevelScheme<T>,
    pub excited: LevelScheme<T>,
    /// Frequency of the g1 → e1 line relative to the common reference, MHz.
    pub optical_offset: T,
}

impl<T: Real> IsotopeLevelSet<T> {
    pub fn new(isotope: u32, ground: LevelScheme<T>, excited: LevelScheme<T>, optical_offset: T) -> Result<Self> {
        if isotope != 151 && isotope != 153 {
            return Err(Error::UnknownIsotope {
                element: "Eu".into(),
                mass_number: isotope,
            });
        }
        if ground.manifold != Manifold::Ground || excited.manifold != Manifold::Excited {
            return Err(Error::invalid("levels", "manifold labels swapped"));
        }
        Ok(Self {
            isotope,
            ground,
            excited,
            optical_offset,
        })
    }

    /// The same levels with the optical offset shifted by `delta`.
    pub fn shifted(&self, delta: T) -> Self {
        Self {
            optical_offset: self.optical_offset + delta,
            ..*self
        }
    }
}

/// Places the two Eu isotopes so that the 153 offset exceeds the 151 offset
/// by `isotope_shift`.
pub fn isotope_pair<T: Real>(
    eu151: (LevelScheme<T>, LevelScheme<T>),
    eu153: (LevelScheme<T>, LevelScheme<T>),
    isotope_shift: T,
) -> Result<(IsotopeLevelSet<T>, IsotopeLevelSet<T>)> {
    Ok((
        IsotopeLevelSet::new(151, eu151.0, eu151.1, T::zero())?,
        IsotopeLevelSet::new(153, eu153.0, eu153.1, isotope_shift)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition<T> {
    /// Ground level index, 0-based (g1 = 0).
    pub ground: usize,
    /// Excited level index, 0-based (e1 = 0).
    pub excited: usize,
    /// MHz.
    pub frequency: T,
    /// Relative strength, max-normalized to 1.
    pub strength: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionTable<T> {
    pub isotope: u32,
    entries: Vec<Transition<T>>,
}

impl<T: Real> TransitionTable<T> {
    pub fn entries(&self) -> &[Transition<T>] {
        &self.entries
    }

    pub fn get(&self, ground: usize, excited: usize) -> &Transition<T> {
        &self.entries[ground * 3 + excited]
    }

    pub fn frequency(&self, ground: usize, excited: usize) -> T {
        self.get(ground, excited).frequency
    }

    /// Distinct frequencies of transitions with strength ≥ `min_strength`,
    /// merging lines closer than `tol` MHz.
    pub fn distinct_frequencies(&self, min_strength: T, tol: T) -> Vec<T> {
        let mut f: Vec<T> = self
            .entries
            .iter()
            .filter(|t| t.strength >= min_strength)
            .map(|t| t.frequency)
            .collect();
        f.sort_by(|a, b| a.partial_cmp(b).expect("finite frequencies"));
        f.dedup_by(|a, b| (*a - *b).abs() <= tol);
        f
    }
}

/// Builds the 3 × 3 transition table: `f(i, j) = offset + E_e(j) − E_g(i)`.
/// `strengths[i][j]` is the relative strength of g(i+1) → e(j+1).
pub fn build_transitions<T: Real>(set: &IsotopeLevelSet<T>, strengths: &[[T; 3]; 3]) -> Result<TransitionTable<T>> {
    let max = strengths.iter().flatten().try_fold(T::zero(), |m, &s| {
        if s >= T::zero() && s.is_finite() {
            Ok(m.max(s))
        } else {
            Err(Error::invalid("strengths", format!("{s} is negative or not finite")))
        }
    })?;
    if max == T::zero() {
        return Err(Error::ZeroStrengths);
    }
    let entries = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| Transition {
            ground: i,
            excited: j,
            frequency: set.optical_offset + set.excited.energy(j) - set.ground.energy(i),
            strength: strengths[i][j] / max,
        })
        .collect();
    Ok(TransitionTable {
        isotope: set.isotope,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport<T> {
    /// 153/151 ratios for the ground splittings (E2−E1, E3−E2, E3−E1).
    pub ground: [T; 3],
    pub excited: [T; 3],
    pub tolerance: T,
    pub pass: bool,
}

/// Compares the hyperfine splittings of the two isotopes against the
/// expected factor of about two.
pub fn check_isotope_ratio<T: Real>(
    s151: &IsotopeLevelSet<T>,
    s153: &IsotopeLevelSet<T>,
    tolerance: T,
) -> Result<RatioReport<T>> {
    let ratios = |a: &LevelScheme<T>, b: &LevelScheme<T>| -> Result<[T; 3]> {
        let (sa, sb) = (a.splittings(), b.splittings());
        let mut out = [T::zero(); 3];
        for k in 0..3 {
            if sa[k] == T::zero() {
                return Err(Error::ZeroSplitting {
                    manifold: a.manifold.label().into(),
                    index: k,
                });
            }
            out[k] = sb[k] / sa[k];
        }
        Ok(out)
    };
    let ground = ratios(&s151.ground, &s153.ground)?;
    let excited = ratios(&s151.excited, &s153.excited)?;
    let two = T::lit(2.0);
    let pass = ground
        .iter()
        .chain(excited.iter())
        .all(|&r| (r - two).abs() <= tolerance);
    Ok(RatioReport {
        ground,
        excited,
        tolerance,
        pass,
    })
}

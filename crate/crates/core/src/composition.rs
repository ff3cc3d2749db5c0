//! Stoichiometry, isotope abundances and Eu-site lattice geometry of
//! EuCl3·6H2O.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::vec3::{self, Vec3};
use crate::num::Real;

const ABUNDANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Element {
    H,
    O,
    Cl,
    Eu,
}

impl Element {
    pub const ALL: [Element; 4] = [Element::H, Element::O, Element::Cl, Element::Eu];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::O => "O",
            Element::Cl => "Cl",
            Element::Eu => "Eu",
        }
    }

    /// Sites per EuCl3·6H2O formula unit.
    pub fn formula_sites(self) -> u32 {
        match self {
            Element::H => 12,
            Element::O => 6,
            Element::Cl => 3,
            Element::Eu => 1,
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Element {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "H" | "h" | "D" => Ok(Element::H),
            "O" | "o" => Ok(Element::O),
            "Cl" | "cl" | "CL" => Ok(Element::Cl),
            "Eu" | "eu" | "EU" => Ok(Element::Eu),
            other => Err(Error::UnknownElement(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Isotope<T> {
    pub element: Element,
    pub mass_number: u32,
    /// Atomic mass in amu.
    pub mass: T,
    /// Fraction of the element's sites, 0–1.
    pub abundance: T,
}

impl<T: Real> Isotope<T> {
    pub fn new(element: Element, mass_number: u32, mass: T, abundance: T) -> Result<Self> {
        if (mass - T::from_u32(mass_number).unwrap()).abs() > T::lit(0.5) {
            return Err(Error::invalid(
                format!("{element}-{mass_number}.mass"),
                format!("atomic mass {mass} is not within 0.5 amu of the mass number"),
            ));
        }
        if !(abundance >= T::zero() && abundance <= T::one()) {
            return Err(Error::invalid(
                format!("{element}-{mass_number}.abundance"),
                format!("{abundance} outside [0, 1]"),
            ));
        }
        Ok(Self {
            element,
            mass_number,
            mass,
            abundance,
        })
    }

    /// Abundance in percent.
    pub fn percent(&self) -> T {
        self.abundance * T::lit(100.0)
    }
}

/// Isotopic makeup of the crystal together with the per-formula-unit site
/// counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrystalComposition<T> {
    isotopes: BTreeMap<Element, Vec<Isotope<T>>>,
    site_counts: BTreeMap<Element, u32>,
}

impl<T: Real> CrystalComposition<T> {
    /// Validates and assembles a composition. Every element of the formula
    /// must be present with abundances summing to one and a unique dominant
    /// isotope.
    pub fn new(isotopes: Vec<Isotope<T>>) -> Result<Self> {
        let mut map: BTreeMap<Element, Vec<Isotope<T>>> = BTreeMap::new();
        for iso in isotopes {
            let list = map.entry(iso.element).or_default();
            if list.iter().any(|i| i.mass_number == iso.mass_number) {
                return Err(Error::invalid(
                    format!("{}-{}", iso.element, iso.mass_number),
                    "isotope listed twice",
                ));
            }
            list.push(iso);
        }
        for list in map.values_mut() {
            list.sort_by_key(|i| i.mass_number);
        }
        let site_counts = Element::ALL.iter().map(|&e| (e, e.formula_sites())).collect();
        let comp = Self {
            isotopes: map,
            site_counts,
        };
        comp.validate()?;
        Ok(comp)
    }

    fn validate(&self) -> Result<()> {
        for element in Element::ALL {
            let list = self
                .isotopes
                .get(&element)
                .filter(|l| !l.is_empty())
                .ok_or_else(|| Error::invalid(element.symbol(), "element of the formula unit has no isotopes"))?;
            let sum = list.iter().fold(T::zero(), |s, i| s + i.abundance);
            let tol = T::lit(ABUNDANCE_TOL).max(T::lit(16.0) * T::epsilon());
            if (sum - T::one()).abs() > tol {
                return Err(Error::invalid(
                    format!("{element}.abundance"),
                    format!("abundances sum to {sum}, expected 1"),
                ));
            }
            self.dominant(element)?;
        }
        for (&element, &count) in &self.site_counts {
            if count == 0 || count != element.formula_sites() {
                return Err(Error::invalid(
                    format!("{element}.sites"),
                    format!("{count} does not match EuCl3·6H2O"),
                ));
            }
        }
        Ok(())
    }

    /// Natural terrestrial abundances. Deuterium is set to 0.0156 %.
    pub fn natural() -> Self {
        let l = T::lit;
        let isotopes = vec![
            Isotope::new(Element::H, 1, l(1.007_825_032), l(1.0 - 0.000_156)),
            Isotope::new(Element::H, 2, l(2.014_101_778), l(0.000_156)),
            Isotope::new(Element::O, 16, l(15.994_914_620), l(1.0 - 0.000_38 - 0.002_05)),
            Isotope::new(Element::O, 17, l(16.999_131_70), l(0.000_38)),
            Isotope::new(Element::O, 18, l(17.999_161_0), l(0.002_05)),
            Isotope::new(Element::Cl, 35, l(34.968_852_68), l(0.7576)),
            Isotope::new(Element::Cl, 37, l(36.965_902_59), l(0.2424)),
            Isotope::new(Element::Eu, 151, l(150.919_850_2), l(0.478)),
            Isotope::new(Element::Eu, 153, l(152.921_230_3), l(0.522)),
        ]
        .into_iter()
        .collect::<Result<Vec<_>>>()
        .expect("natural isotope table is valid");
        Self::new(isotopes).expect("natural composition is valid")
    }

    pub fn isotopes(&self, element: Element) -> &[Isotope<T>] {
        self.isotopes.get(&element).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Isotope<T>> {
        self.isotopes.values().flatten()
    }

    pub fn site_count(&self, element: Element) -> u32 {
        self.site_counts[&element]
    }

    pub fn isotope(&self, element: Element, mass_number: u32) -> Result<&Isotope<T>> {
        self.isotopes(element)
            .iter()
            .find(|i| i.mass_number == mass_number)
            .ok_or_else(|| Error::UnknownIsotope {
                element: element.to_string(),
                mass_number,
            })
    }

    pub fn abundance(&self, element: Element, mass_number: u32) -> Result<T> {
        self.isotope(element, mass_number).map(|i| i.abundance)
    }

    /// Highest-abundance isotope of `element`. Exact ties are rejected.
    pub fn dominant(&self, element: Element) -> Result<&Isotope<T>> {
        let list = self.isotopes(element);
        let mut best: Option<&Isotope<T>> = None;
        let mut tie: Option<u32> = None;
        for iso in list {
            match best {
                None => best = Some(iso),
                Some(b) if iso.abundance > b.abundance => {
                    best = Some(iso);
                    tie = None;
                }
                Some(b) if iso.abundance == b.abundance => tie = Some(iso.mass_number),
                _ => {}
            }
        }
        let best = best.ok_or_else(|| Error::UnknownElement(element.to_string()))?;
        if let Some(second) = tie {
            return Err(Error::AmbiguousDominantIsotope {
                element: element.to_string(),
                first: best.mass_number,
                second,
            });
        }
        Ok(best)
    }

    /// Sets the target isotope's abundance to `purity`, sharing the remainder
    /// among the other isotopes in proportion to their previous abundances.
    pub fn purify(&self, element: Element, mass_number: u32, purity: T) -> Result<Self> {
        if !(purity > T::zero() && purity <= T::one()) {
            return Err(Error::invalid("purity", format!("{purity} outside (0, 1]")));
        }
        self.isotope(element, mass_number)?;
        let mut next = self.clone();
        let list = next.isotopes.get_mut(&element).expect("element present");
        let others: T = list
            .iter()
            .filter(|i| i.mass_number != mass_number)
            .fold(T::zero(), |s, i| s + i.abundance);
        let n_others = list.len() - 1;
        let remainder = T::one() - purity;
        for iso in list.iter_mut() {
            iso.abundance = if iso.mass_number == mass_number {
                purity
            } else if others > T::zero() {
                remainder * iso.abundance / others
            } else {
                remainder / T::from_usize_lossy(n_others)
            };
        }
        let sum = list.iter().fold(T::zero(), |s, i| s + i.abundance);
        for iso in list.iter_mut() {
            iso.abundance /= sum;
        }
        next.validate()?;
        Ok(next)
    }

    /// Replaces the abundances of one element wholesale.
    pub fn with_abundances(&self, element: Element, abundances: &[(u32, T)]) -> Result<Self> {
        let mut next = self.clone();
        for &(mass_number, _) in abundances {
            self.isotope(element, mass_number)?;
        }
        let list = next.isotopes.get_mut(&element).expect("element present");
        for iso in list.iter_mut() {
            iso.abundance = abundances
                .iter()
                .find(|(a, _)| *a == iso.mass_number)
                .map(|&(_, x)| x)
                .unwrap_or(T::zero());
        }
        next.validate()?;
        Ok(next)
    }
}

/// Unit cell of the Eu sublattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeGeometry<T> {
    /// Rows are the cell vectors a, b, c in Å.
    pub basis: [Vec3<T>; 3],
    /// Eu positions in fractional coordinates.
    pub eu_sites: Vec<Vec3<T>>,
    /// Unit vector along the site's C2 axis.
    pub c2_axis: Vec3<T>,
}

impl<T: Real> LatticeGeometry<T> {
    pub fn new(basis: [Vec3<T>; 3], eu_sites: Vec<Vec3<T>>, c2_axis: Vec3<T>) -> Result<Self> {
        let g = Self {
            basis,
            eu_sites,
            c2_axis,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let vol = self.volume();
        let scale = self.basis.iter().fold(T::one(), |p, v| p * vec3::norm(*v));
        if !(vol > T::lit(1e-9) * scale) {
            return Err(Error::DegenerateCell {
                volume: vol.to_f64_lossy(),
            });
        }
        if self.eu_sites.is_empty() {
            return Err(Error::Empty("eu_sites"));
        }
        for (k, site) in self.eu_sites.iter().enumerate() {
            if site.iter().any(|&f| !(f >= T::zero() && f < T::one())) {
                return Err(Error::invalid(
                    format!("eu_sites[{k}]"),
                    "fractional coordinates must lie in [0, 1)",
                ));
            }
        }
        let axis_norm = vec3::norm(self.c2_axis);
        if (axis_norm - T::one()).abs() > T::lit(1e-6) {
            return Err(Error::invalid(
                "c2_axis",
                format!("not a unit vector (norm {axis_norm})"),
            ));
        }
        Ok(())
    }

    /// Parses the TOML geometry file format (`basis`, `eu_sites`, `c2_axis`).
    pub fn from_toml(text: &str) -> Result<Self>
    where
        T: for<'de> Deserialize<'de>,
    {
        let g: Self = toml::from_str(text).map_err(|e| Error::invalid("lattice geometry", e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn volume(&self) -> T {
        vec3::triple(&self.basis).abs()
    }

    pub fn site_position(&self, site: usize) -> Vec3<T> {
        vec3::frac_to_cart(&self.basis, self.eu_sites[site])
    }

    /// Spacing between lattice planes parallel to each pair of cell vectors.
    pub fn plane_spacings(&self) -> Vec3<T> {
        let v = self.volume();
        let [a, b, c] = self.basis;
        [
            v / vec3::norm(vec3::cross(b, c)),
            v / vec3::norm(vec3::cross(c, a)),
            v / vec3::norm(vec3::cross(a, b)),
        ]
    }

    /// Applies a rotation (row-major 3×3) to the cell vectors and C2 axis.
    pub fn rotated(&self, rot: &[Vec3<T>; 3]) -> Self {
        let apply = |v: Vec3<T>| [vec3::dot(rot[0], v), vec3::dot(rot[1], v), vec3::dot(rot[2], v)];
        Self {
            basis: [apply(self.basis[0]), apply(self.basis[1]), apply(self.basis[2])],
            eu_sites: self.eu_sites.clone(),
            c2_axis: apply(self.c2_axis),
        }
    }
}

/// Neighbors of the first Eu site at one distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Shell<T> {
    pub distance: T,
    /// Unit vectors from the central ion to each neighbor in the shell.
    pub directions: Vec<Vec3<T>>,
}

impl<T: Real> Shell<T> {
    pub fn multiplicity(&self) -> usize {
        self.directions.len()
    }

    /// Representative direction of the shell.
    pub fn direction(&self) -> Vec3<T> {
        self.directions[0]
    }
}

const SHELL_TOL: f64 = 1e-3;

/// Neighbor shells of the first Eu site out to `cutoff` Å, found by a
/// distance scan over enough periodic images to cover the cutoff sphere.
pub fn neighbor_shells<T: Real>(g: &LatticeGeometry<T>, cutoff: T) -> Result<Vec<Shell<T>>> {
    if !(cutoff > T::zero()) {
        return Err(Error::invalid("cutoff", format!("{cutoff} must be > 0")));
    }
    g.validate()?;
    let spacings = g.plane_spacings();
    let reach: Vec<i64> = spacings
        .iter()
        .map(|&h| (cutoff / h).ceil().to_i64().unwrap_or(0) + 1)
        .collect();
    let origin = g.site_position(0);
    let mut found: Vec<(T, Vec3<T>)> = Vec::new();
    for site in &g.eu_sites {
        for i in -reach[0]..=reach[0] {
            for j in -reach[1]..=reach[1] {
                for k in -reach[2]..=reach[2] {
                    let frac = [
                        site[0] + T::from_i64(i).unwrap(),
                        site[1] + T::from_i64(j).unwrap(),
                        site[2] + T::from_i64(k).unwrap(),
                    ];
                    let d = vec3::sub(vec3::frac_to_cart(&g.basis, frac), origin);
                    let r = vec3::norm(d);
                    if r > T::lit(1e-9) && r <= cutoff {
                        found.push((r, vec3::scale(d, T::one() / r)));
                    }
                }
            }
        }
    }
    found.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances"));
    let mut shells: Vec<Shell<T>> = Vec::new();
    for (r, dir) in found {
        match shells.last_mut() {
            Some(s) if r - s.distance <= T::lit(SHELL_TOL) => s.directions.push(dir),
            _ => shells.push(Shell {
                distance: r,
                directions: vec![dir],
            }),
        }
    }
    Ok(shells)
}

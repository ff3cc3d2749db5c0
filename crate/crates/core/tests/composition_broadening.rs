mod common;

use approx::assert_relative_eq;
use proptest::prelude::*;

use eucl::broadening::{BroadeningModel, CombinationRule, MassConvention};
use eucl::composition::{neighbor_shells, CrystalComposition, Element, LatticeGeometry};

fn geometry() -> LatticeGeometry<f64> {
    let text = std::fs::read_to_string(common::repo_root().join("data/eucl3_6h2o_lattice.toml")).unwrap();
    LatticeGeometry::from_toml(&text).unwrap()
}

/// All images in a 5×5×5 block of cells, grouped by distance from site 0.
fn brute_force_shells(g: &LatticeGeometry<f64>, cutoff: f64) -> Vec<(f64, usize)> {
    let origin = g.site_position(0);
    let mut d = Vec::new();
    for s in &g.eu_sites {
        for i in -2..=2 {
            for j in -2..=2 {
                for k in -2..=2 {
                    let f = [s[0] + i as f64, s[1] + j as f64, s[2] + k as f64];
                    let p: Vec<f64> = (0..3)
                        .map(|c| f[0] * g.basis[0][c] + f[1] * g.basis[1][c] + f[2] * g.basis[2][c] - origin[c])
                        .collect();
                    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                    if r > 1e-9 && r <= cutoff {
                        d.push(r);
                    }
                }
            }
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<(f64, usize)> = Vec::new();
    for r in d {
        match out.last_mut() {
            Some(last) if r - last.0 <= 1e-3 => last.1 += 1,
            _ => out.push((r, 1)),
        }
    }
    out
}

#[test]
fn shells_match_brute_force() {
    let g = geometry();
    let shells = neighbor_shells(&g, 10.0).unwrap();
    let brute = brute_force_shells(&g, 10.0);
    assert_eq!(shells.len(), brute.len());
    for (s, (r, m)) in shells.iter().zip(&brute) {
        assert_relative_eq!(s.distance, *r, epsilon = 1e-9);
        assert_eq!(s.multiplicity(), *m, "shell at {r}");
    }
}

#[test]
fn nearest_shells() {
    let shells = neighbor_shells(&geometry(), 8.0).unwrap();
    let summary: Vec<(f64, usize)> = shells
        .iter()
        .map(|s| ((s.distance * 1000.0).round() / 1000.0, s.multiplicity()))
        .collect();
    assert_eq!(summary[0], (6.382, 2));
    assert_eq!(summary[1], (6.53, 2));
    // the 6.53 Å pair lies along the twofold axis
    for dir in &shells[1].directions {
        assert_relative_eq!(dir[1].abs(), 1.0, epsilon = 1e-12);
    }
    assert!(summary.iter().any(|&(r, _)| r == 7.965));
}

#[test]
fn degenerate_cell_rejected() {
    let g = LatticeGeometry::new(
        [[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
        vec![[0.0; 3]],
        [0.0, 1.0, 0.0],
    );
    assert!(g.is_err());
    assert!(neighbor_shells(&geometry(), -1.0).is_err());
}

fn rotation(a: f64, b: f64, c: f64) -> [[f64; 3]; 3] {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let (sc, cc) = c.sin_cos();
    let rz = |s: f64, c: f64| [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
    let ry = [[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]];
    let mul = |x: [[f64; 3]; 3], y: [[f64; 3]; 3]| {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = (0..3).map(|k| x[i][k] * y[k][j]).sum();
            }
        }
        m
    };
    mul(mul(rz(sa, ca), ry), rz(sc, cc))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn shells_invariant_under_rotation(a in 0.0f64..6.3, b in 0.0f64..3.2, c in 0.0f64..6.3) {
        let g = geometry();
        let turned = g.rotated(&rotation(a, b, c));
        let s0 = neighbor_shells(&g, 9.0).unwrap();
        let s1 = neighbor_shells(&turned, 9.0).unwrap();
        prop_assert_eq!(s0.len(), s1.len());
        for (x, y) in s0.iter().zip(&s1) {
            prop_assert!((x.distance - y.distance).abs() < 1e-9);
            prop_assert_eq!(x.multiplicity(), y.multiplicity());
            let cos = |d: [f64; 3], axis: [f64; 3]| (d[0] * axis[0] + d[1] * axis[1] + d[2] * axis[2]).abs();
            let mut c0: Vec<f64> = x.directions.iter().map(|&d| cos(d, g.c2_axis)).collect();
            let mut c1: Vec<f64> = y.directions.iter().map(|&d| cos(d, turned.c2_axis)).collect();
            c0.sort_by(|p, q| p.partial_cmp(q).unwrap());
            c1.sort_by(|p, q| p.partial_cmp(q).unwrap());
            for (p, q) in c0.iter().zip(&c1) {
                prop_assert!((p - q).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn contribution_linear_in_abundance(a in 0.0f64..0.49) {
        let m = BroadeningModel::<f64>::default();
        let c = CrystalComposition::natural().with_abundances(Element::Cl, &[(35, 1.0 - a), (37, a)]).unwrap();
        let v = m.isotope_contribution(&c, Element::Cl, 37).unwrap();
        prop_assert!((v - 182.0 * 2.0 / 37.0 * 0.25 * 100.0 * a).abs() <= 1e-9 * (1.0 + v));
    }

    #[test]
    fn contribution_scales_with_calibration(rate in 1.0f64..500.0) {
        let c = CrystalComposition::natural();
        let m = BroadeningModel::new(rate, CombinationRule::Linear, MassConvention::MassNumber).unwrap();
        let base = BroadeningModel::<f64>::default();
        let ratio = m.isotope_contribution(&c, Element::Eu, 151).unwrap()
            / base.isotope_contribution(&c, Element::Eu, 151).unwrap();
        prop_assert!((ratio - rate / 91.0).abs() < 1e-12 * ratio);
    }

    #[test]
    fn quadrature_never_exceeds_linear(base in 0.0f64..50.0) {
        let c = CrystalComposition::natural();
        let lin = BroadeningModel::<f64>::default().total_linewidth(&c, base).unwrap();
        let quad = BroadeningModel::new(91.0, CombinationRule::Quadrature, MassConvention::MassNumber)
            .unwrap()
            .total_linewidth(&c, base)
            .unwrap();
        prop_assert!(quad.total <= lin.total + 1e-12);
        prop_assert!(quad.total >= lin.largest().unwrap().mhz.max(base) - 1e-12);
    }

    #[test]
    fn purification_reduces_broadening(p1 in 0.76f64..1.0, p2 in 0.76f64..1.0) {
        let (lo, hi) = if p1 < p2 { (p1, p2) } else { (p2, p1) };
        let m = BroadeningModel::<f64>::default();
        let pts = m.broadening_vs_purity(&CrystalComposition::natural(), Element::Cl, 35, &[lo, hi]).unwrap();
        prop_assert!(pts[1].mhz <= pts[0].mhz + 1e-12);
    }
}

#[test]
fn natural_estimates() {
    let m = BroadeningModel::<f64>::default();
    let r = m.total_linewidth(&CrystalComposition::natural(), 0.0).unwrap();
    assert_relative_eq!(r.get(Element::Cl, 37).unwrap(), 59.62, epsilon = 0.01);
    assert_relative_eq!(r.get(Element::Eu, 151).unwrap(), 9.60, epsilon = 0.01);
    assert_relative_eq!(r.get(Element::H, 2).unwrap(), 1.42, epsilon = 0.01);
    assert_relative_eq!(r.element_total(Element::O), 2.28, epsilon = 0.01);
    assert_eq!(r.largest().unwrap().element, Element::Cl);
}

#[test]
fn purified_crystal_residuals() {
    let m = BroadeningModel::<f64>::default();
    let c = CrystalComposition::natural().purify(Element::Cl, 35, 0.9967).unwrap();
    let r = m.total_linewidth(&c, 0.0).unwrap();
    assert!(r.element_total(Element::Cl) < 1.0);
    assert!(r.total <= 25.0);
    let oh = r.element_total(Element::O) + r.element_total(Element::H);
    assert_relative_eq!(oh, 3.70, epsilon = 0.01);
}

#[test]
fn atomic_mass_convention_is_close() {
    let c = CrystalComposition::natural();
    let a = BroadeningModel::new(91.0, CombinationRule::Linear, MassConvention::AtomicMass).unwrap();
    let cl: f64 = a.isotope_contribution(&c, Element::Cl, 37).unwrap();
    assert!((cl - 59.62).abs() < 1.5, "{cl}");
}

#[test]
fn single_precision_agrees() {
    let m32 = BroadeningModel::<f32>::default();
    let c32 = CrystalComposition::<f32>::natural();
    let v = m32.isotope_contribution(&c32, Element::Cl, 37).unwrap();
    assert!((v - 59.62).abs() < 0.01);
}

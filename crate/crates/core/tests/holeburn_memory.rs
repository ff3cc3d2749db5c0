use approx::assert_relative_eq;
use proptest::prelude::*;

use eucl::holeburn::{
    class_rates, evolve, number_density, optical_depth, peak_cross_section, prepare_population, steady_state,
    steady_state_from, Band, ClassEnsemble, ClassState, PumpScenario,
};
use eucl::levels::{build_transitions, IsotopeLevelSet, LevelScheme, Manifold, TransitionTable};
use eucl::memory::{absorption_over_length, gem_efficiency, required_depth, DepthBudget};
use eucl::spectrum::{LineShape, LineShapeKind};

fn table153() -> TransitionTable<f64> {
    let set = IsotopeLevelSet::new(
        153,
        LevelScheme::new(Manifold::Ground, [0.0, 80.6, 165.1]).unwrap(),
        LevelScheme::new(Manifold::Excited, [0.0, 190.0, 320.0]).unwrap(),
        200.0,
    )
    .unwrap();
    build_transitions(&set, &[[0.15, 0.0, 1.0], [0.0, 0.15, 1.0], [1.0, 0.0, 1.0]]).unwrap()
}

fn scenario(bands: Vec<(f64, f64)>, r0: f64, w: f64, beta: [f64; 3]) -> PumpScenario<f64> {
    let bands = bands.into_iter().map(|(a, b)| Band::new(a, b).unwrap()).collect();
    PumpScenario::new(bands, r0, w, 2e-3, beta).unwrap()
}

/// Rate from level `from` to level `to`, written out from the rate equations.
fn rate(s: &PumpScenario<f64>, r: [f64; 3], from: usize, to: usize) -> f64 {
    let gamma = 1.0 / s.t1;
    let h = s.hyperfine_relaxation;
    match (from, to) {
        (i, 3) if i < 3 => r[i],
        (3, j) if j < 3 => s.beta[j] * gamma,
        (0, 1) | (1, 0) => s.rf_rate + h,
        (0, 2) | (2, 0) | (1, 2) | (2, 1) => h,
        _ => 0.0,
    }
}

/// Stationary distribution by the Markov chain tree theorem: π_i is
/// proportional to the summed weight of spanning trees directed into i.
fn tree_theorem(s: &PumpScenario<f64>, r: [f64; 3]) -> [f64; 4] {
    let mut pi = [0.0; 4];
    for (root, slot) in pi.iter_mut().enumerate() {
        let others: Vec<usize> = (0..4).filter(|&v| v != root).collect();
        for code in 0..64usize {
            let parent: Vec<usize> = (0..3).map(|k| code >> (2 * k) & 3).collect();
            if others.iter().zip(&parent).any(|(&v, &p)| p == v) {
                continue;
            }
            let next = |v: usize| parent[others.iter().position(|&o| o == v).unwrap()];
            let rooted = others.iter().all(|&v| {
                let mut x = v;
                for _ in 0..4 {
                    if x == root {
                        return true;
                    }
                    x = next(x);
                }
                x == root
            });
            if !rooted {
                continue;
            }
            *slot += others.iter().map(|&v| rate(s, r, v, next(v))).product::<f64>();
        }
    }
    let total: f64 = pi.iter().sum();
    pi.map(|p| p / total)
}

fn beta_strategy() -> impl Strategy<Value = [f64; 3]> {
    (0.05f64..1.0, 0.05f64..1.0, 0.05f64..1.0).prop_map(|(a, b, c)| {
        let t = a + b + c;
        [a / t, b / t, 1.0 - a / t - b / t]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn steady_state_is_long_time_limit(
        r in (1.0f64..1e5, 1.0f64..1e5, 0.0f64..1e5),
        w in 0.0f64..1e5,
        h in 0.0f64..1.0,
        beta in beta_strategy(),
    ) {
        let mut s = scenario(vec![(0.0, 1.0)], 1e4, w, beta);
        s.hyperfine_relaxation = h;
        let rates = [r.0, r.1, r.2];
        let st = steady_state_from(&ClassState::thermal(), rates, &s).unwrap();
        let long = evolve(&ClassState::thermal(), rates, &s, 1e6).unwrap();
        for k in 0..4 {
            prop_assert!((st.populations[k] - long.state.populations[k]).abs() <= 1e-6, "{:?} vs {:?}", st, long);
        }
        prop_assert!((long.state.total() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn steady_state_matches_tree_theorem(
        r in (1.0f64..1e5, 1.0f64..1e5, 1.0f64..1e5),
        w in 0.0f64..1e5,
        h in 0.0f64..10.0,
        beta in beta_strategy(),
    ) {
        let mut s = scenario(vec![(0.0, 1.0)], 1e4, w, beta);
        s.hyperfine_relaxation = h;
        let rates = [r.0, r.1, r.2];
        let st = steady_state(rates, &s).unwrap();
        let oracle = tree_theorem(&s, rates);
        for k in 0..4 {
            prop_assert!((st.populations[k] - oracle[k]).abs() <= 1e-8, "{:?} vs {:?}", st, oracle);
        }
    }

    #[test]
    fn evolution_conserves_population(
        r in (0.0f64..1e5, 0.0f64..1e5, 0.0f64..1e5),
        w in 0.0f64..1e5,
        beta in beta_strategy(),
        t_units in 0.0f64..1e4,
        p in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
    ) {
        let s = scenario(vec![(0.0, 1.0)], 1e4, w, beta);
        let sum = p.0 + p.1 + p.2 + p.3 + 1e-9;
        let start = ClassState::new([p.0 / sum, p.1 / sum, p.2 / sum, 1.0 - (p.0 + p.1 + p.2) / sum]).unwrap();
        let out = evolve(&start, [r.0, r.1, r.2], &s, t_units * s.t1).unwrap();
        prop_assert!((out.state.total() - 1.0).abs() <= 1e-9);
        prop_assert!(!out.clipped);
        prop_assert!(out.state.populations.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn dark_g3_never_gains(r in (0.0f64..1e5, 0.0f64..1e5, 0.0f64..1e5), w in 0.0f64..1e5, b1 in 0.0f64..1.0) {
        let s = scenario(vec![(0.0, 1.0)], 1e4, w, [b1, 1.0 - b1, 0.0]);
        let rates = [r.0, r.1, r.2];
        let mut previous = ClassState::thermal().g3();
        for k in 1..40 {
            let t = 1e-5 * 1.5f64.powi(k);
            let g3 = evolve(&ClassState::thermal(), rates, &s, t).unwrap().state.g3();
            prop_assert!(g3 <= previous + 1e-12, "t = {t}: {g3} > {previous}");
            previous = g3;
        }
    }

    #[test]
    fn wider_bands_prepare_more(lo1 in 416.0f64..429.0, hi1 in 530.0f64..560.0, dlo in 0.0f64..10.0, dhi in 0.0f64..40.0) {
        let lo2 = (lo1 - dlo).max(415.5);
        let e = ClassEnsemble::new(LineShape::lorentzian(25.0).unwrap(), 121, 60.0, table153()).unwrap();
        let narrow = scenario(vec![(lo1, hi1)], 1e4, 1e4, [1.0 / 3.0; 3]);
        let wide = scenario(vec![(lo2, hi1 + dhi)], 1e4, 1e4, [1.0 / 3.0; 3]);
        // g3→e3 stays outside the bands for every class
        for &d in e.detunings() {
            prop_assert_eq!(class_rates(&e, &wide, d)[2], 0.0);
        }
        let a = prepare_population(&e, &narrow).unwrap().global_fraction;
        let b = prepare_population(&e, &wide).unwrap().global_fraction;
        prop_assert!(b >= a - 1e-12, "{a} -> {b}");
    }

    #[test]
    fn memory_is_monotone(d1 in 0.0f64..20.0, d2 in 0.0f64..20.0) {
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        prop_assume!(hi - lo > 1e-9);
        prop_assert!(gem_efficiency(hi) > gem_efficiency(lo) || gem_efficiency(hi) == 1.0);
        prop_assert!(gem_efficiency(hi) <= 1.0 && gem_efficiency(lo) >= 0.0);
        let a = absorption_over_length(hi, 1.0).unwrap();
        prop_assert!(a >= absorption_over_length(lo, 1.0).unwrap());
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn required_depth_round_trip(eta in 0.0f64..0.999) {
        let d = required_depth(eta).unwrap();
        prop_assert!((gem_efficiency(d) - eta).abs() <= 1e-12);
    }
}

#[test]
fn class_rate_geometry() {
    let e = ClassEnsemble::new(LineShape::lorentzian(25.0).unwrap(), 1001, 500.0, table153()).unwrap();
    let s = scenario(vec![(424.4, 535.0)], 1e4, 1e4, [1.0 / 3.0; 3]);
    assert_eq!(class_rates(&e, &s, 0.0), [1e4, 1e4, 0.0]);
    assert_eq!(class_rates(&e, &s, 400.0), [0.0; 3]);
    // 354.9 + 80 lies in the band; 439.4 + 80 as well, 520 + 80 does not
    assert_eq!(class_rates(&e, &s, 80.0), [0.0, 1e4, 1e4]);
    let w: f64 = e.weights().iter().sum();
    assert_relative_eq!(w, 1.0, epsilon = 1e-9);
    let d = e.detunings();
    for k in 0..d.len() {
        assert_eq!(d[k], -d[d.len() - 1 - k]);
    }
}

#[test]
fn absorbing_and_rf_limits() {
    let s = scenario(vec![(0.0, 1.0)], 1e4, 1e4, [1.0 / 3.0; 3]);
    let st = steady_state([1e4, 1e4, 0.0], &s).unwrap();
    assert_relative_eq!(st.g3(), 1.0, epsilon = 1e-12);
    let only_rf = steady_state_from(&ClassState::new([0.5, 0.1, 0.4, 0.0]).unwrap(), [0.0; 3], &s).unwrap();
    assert_relative_eq!(only_rf.populations[0], 0.3, epsilon = 1e-12);
    assert_relative_eq!(only_rf.populations[1], 0.3, epsilon = 1e-12);
    assert_relative_eq!(only_rf.populations[2], 0.4, epsilon = 1e-12);
    assert!(steady_state([0.0; 3], &s).is_err());
    let still = evolve(
        &ClassState::thermal(),
        [0.0; 3],
        &PumpScenario {
            rf_rate: 0.0,
            ..s.clone()
        },
        10.0,
    )
    .unwrap();
    assert_eq!(still.state, ClassState::thermal());
}

#[test]
fn broad_profile_degrades_preparation() {
    let s = scenario(vec![(424.4, 535.0)], 1e4, 1e4, [1.0 / 3.0; 3]);
    let e = ClassEnsemble::new(LineShape::lorentzian(25.0).unwrap(), 1001, 500.0, table153()).unwrap();
    let p25 = prepare_population(&e, &s).unwrap();
    assert!(p25.global_fraction > 0.9);
    assert!(p25.center_fraction > 0.98);
    let p_wide = prepare_population(&e.with_fwhm(2000.0).unwrap(), &s).unwrap();
    assert!(p_wide.global_fraction < 0.9);
    assert!(p_wide.global_fraction < p25.global_fraction);
}

#[test]
fn fully_covered_classes_prepare_everything() {
    let e = ClassEnsemble::new(LineShape::gaussian(25.0).unwrap(), 201, 60.0, table153()).unwrap();
    let s = scenario(vec![(415.0, 600.0)], 1e4, 1e4, [1.0 / 3.0; 3]);
    let p = prepare_population(&e, &s).unwrap();
    assert_relative_eq!(p.global_fraction, 1.0, epsilon = 1e-9);
}

#[test]
fn optical_depth_reference() {
    let sigma: f64 = peak_cross_section(3e-9, 25.0, LineShapeKind::Lorentzian).unwrap();
    assert_relative_eq!(
        sigma,
        2.0 * 2.654e-2 * 3e-9 / (std::f64::consts::PI * 25e6),
        max_relative = 1e-12
    );
    let n: f64 = number_density(2.42, 366.4).unwrap();
    assert_relative_eq!(n, 3.98e21, max_relative = 2e-3);
    let alpha: f64 = optical_depth(0.9, 3e-9, n * 0.522, 25.0, LineShapeKind::Lorentzian).unwrap();
    assert!((alpha - 3.9e3).abs() < 0.2 * 3.9e3, "{alpha}");
    let half = optical_depth(0.9, 3e-9, n * 0.522, 50.0, LineShapeKind::Lorentzian).unwrap();
    assert_relative_eq!(half, alpha / 2.0, max_relative = 1e-12);
    assert!(optical_depth(0.0, 3e-9, n, 25.0, LineShapeKind::Lorentzian).is_err());
}

#[test]
fn memory_reference() {
    assert!((gem_efficiency(4.0f64) - 0.964).abs() < 1e-3);
    assert!((required_depth(0.9f64).unwrap() - 2.97).abs() < 0.01);
    assert!((absorption_over_length(4000.0f64, 1e-4).unwrap() - 0.33).abs() < 0.01);
    let b = DepthBudget::new(4000.0, 1e-3).unwrap();
    assert_relative_eq!(b.depth(), 4.0, epsilon = 1e-12);
    assert!(required_depth(1.0f64).is_err());
}

#[test]
fn single_precision_pumping() {
    let s = PumpScenario::<f32>::new(vec![Band::new(0.0, 1.0).unwrap()], 1e4, 1e4, 2e-3, [1.0 / 3.0; 3]).unwrap();
    let out = evolve(&ClassState::thermal(), [1e4, 1e4, 0.0], &s, 1.0).unwrap();
    assert!((out.state.total() - 1.0).abs() < 1e-5);
    assert!(out.state.g3() > 0.999);
}

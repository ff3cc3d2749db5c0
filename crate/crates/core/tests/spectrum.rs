use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use eucl::levels::{build_transitions, IsotopeLevelSet, LevelScheme, Manifold, TransitionTable};
use eucl::spectrum::{
    apply_satellites, binomial_weight, fit_peaks, fit_peaks_with, resolved_count, synthesize, synthesize_jittered,
    synthesize_lines, FitOptions, FrequencyGrid, LineShape, LineShapeKind, SatelliteClass, SatelliteModel, Spectrum,
    WeightedLine,
};

const STRENGTHS: [[f64; 3]; 3] = [[0.15, 0.0, 1.0], [0.0, 0.15, 1.0], [1.0, 0.0, 1.0]];

fn table153() -> TransitionTable<f64> {
    let set = IsotopeLevelSet::new(
        153,
        LevelScheme::new(Manifold::Ground, [0.0, 80.6, 165.1]).unwrap(),
        LevelScheme::new(Manifold::Excited, [0.0, 190.0, 320.0]).unwrap(),
        200.0,
    )
    .unwrap();
    build_transitions(&set, &STRENGTHS).unwrap()
}

fn line(frequency: f64, weight: f64) -> WeightedLine<f64> {
    WeightedLine { frequency, weight }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gaussian_area_is_width_independent(w1 in 5.0f64..60.0, w2 in 5.0f64..60.0, f in -50.0f64..50.0, a in 0.1f64..3.0) {
        let grid = FrequencyGrid::spanning(-500.0, 500.0, 0.25).unwrap();
        let s1 = synthesize_lines(&[line(f, a)], &LineShape::gaussian(w1).unwrap(), &grid).unwrap();
        let s2 = synthesize_lines(&[line(f, a)], &LineShape::gaussian(w2).unwrap(), &grid).unwrap();
        prop_assert!((s1.area() - s2.area()).abs() <= 1e-3 * a);
        prop_assert!((s1.area() - a).abs() <= 1e-3 * a);
    }

    #[test]
    fn lorentzian_area_matches_truncated_integral(w in 5.0f64..60.0, f in -50.0f64..50.0) {
        let grid = FrequencyGrid::spanning(-1000.0, 1000.0, 0.25).unwrap();
        let s = synthesize_lines(&[line(f, 1.0)], &LineShape::lorentzian(w).unwrap(), &grid).unwrap();
        let inside = |x: f64| (2.0 * x / w).atan() / std::f64::consts::PI;
        let expected = inside(grid.end() - f) - inside(grid.start - f);
        prop_assert!((s.area() - expected).abs() <= 1e-3 * expected);
    }

    #[test]
    fn synthesis_is_linear(
        w1 in proptest::collection::vec(0.0f64..2.0, 6),
        w2 in proptest::collection::vec(0.0f64..2.0, 6),
    ) {
        let grid = FrequencyGrid::spanning(-200.0, 300.0, 0.5).unwrap();
        let shape = LineShape::lorentzian(25.0).unwrap();
        let freqs = [-50.0, 0.0, 20.0, 75.0, 130.0, 170.0];
        let mk = |w: &[f64]| -> Vec<WeightedLine<f64>> { freqs.iter().zip(w).map(|(&f, &a)| line(f, a)).collect() };
        let sum: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| a + b).collect();
        let s = synthesize_lines(&mk(&sum), &shape, &grid).unwrap();
        let s1 = synthesize_lines(&mk(&w1), &shape, &grid).unwrap();
        let s2 = synthesize_lines(&mk(&w2), &shape, &grid).unwrap();
        for ((x, y), z) in s.intensity().iter().zip(s1.intensity()).zip(s2.intensity()) {
            prop_assert!((x - (y + z)).abs() <= 1e-12 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn satellites_preserve_weight(n in 1u32..8, a in 0.0f64..1.0, shift in -100.0f64..100.0, w in 0.01f64..5.0) {
        let model = SatelliteModel::new(vec![SatelliteClass { label: "x".into(), positions: n, abundance: a, shift }]).unwrap();
        let out = apply_satellites(&[line(10.0, w)], &model);
        let total: f64 = out.iter().map(|l| l.weight).sum();
        prop_assert!((total - w).abs() <= 1e-9 * w);
    }

    #[test]
    fn binomial_matches_enumeration(n in 1u32..10, a in 0.0f64..1.0) {
        // brute force over all 2^n site assignments
        let mut by_k = vec![0.0; n as usize + 1];
        for mask in 0u32..(1 << n) {
            let k = mask.count_ones();
            by_k[k as usize] += a.powi(k as i32) * (1.0 - a).powi((n - k) as i32);
        }
        for k in 0..=n {
            prop_assert!((binomial_weight(n, k, a) - by_k[k as usize]).abs() <= 1e-12);
        }
    }

    #[test]
    fn fit_recovers_separated_lines(
        w in 10.0f64..40.0,
        gaps in proptest::collection::vec(3.2f64..6.0, 1..4),
        weights in proptest::collection::vec(0.3f64..1.0, 4),
        gaussian in any::<bool>(),
    ) {
        let mut centers = vec![0.0];
        for g in &gaps {
            centers.push(centers.last().unwrap() + g * w);
        }
        let lines: Vec<_> = centers.iter().zip(&weights).map(|(&c, &a)| line(c, a)).collect();
        let kind = if gaussian { LineShapeKind::Gaussian } else { LineShapeKind::Lorentzian };
        let shape = LineShape::new(kind, w).unwrap();
        let grid = FrequencyGrid::spanning(-10.0 * w, centers.last().unwrap() + 10.0 * w, 0.5).unwrap();
        let s = synthesize_lines(&lines, &shape, &grid).unwrap();
        let fit = fit_peaks(&s, kind, lines.len()).unwrap();
        prop_assert_eq!(fit.peaks.len(), lines.len());
        for (p, l) in fit.peaks.iter().zip(&lines) {
            prop_assert!((p.center - l.frequency).abs() < 1.0, "{:?} vs {:?}", p, l);
            prop_assert!((p.fwhm - w).abs() < 0.02 * w, "{:?} vs {}", p, w);
        }
    }
}

#[test]
fn single_line_round_trip() {
    let grid = FrequencyGrid::spanning(-300.0, 300.0, 0.5).unwrap();
    let s = synthesize_lines(&[line(0.0, 1.0)], &LineShape::lorentzian(25.0).unwrap(), &grid).unwrap();
    assert_relative_eq!(s.measured_fwhm().unwrap(), 25.0, epsilon = 0.5);
    let fit = fit_peaks(&s, LineShapeKind::Lorentzian, 1).unwrap();
    assert_relative_eq!(fit.peaks[0].fwhm, 25.0, epsilon = 0.1);
    assert!(fit.residual_rms < 1e-8);
}

#[test]
fn multiplet_centers_recovered() {
    let table = table153();
    let grid = FrequencyGrid::spanning(-200.0, 750.0, 0.5).unwrap();
    let s = synthesize(&[(&table, 1.0)], &LineShape::lorentzian(25.0).unwrap(), &grid).unwrap();
    let expected = table.distinct_frequencies(0.1, 0.5);
    let fit = fit_peaks(&s, LineShapeKind::Lorentzian, expected.len()).unwrap();
    assert_eq!(fit.peaks.len(), expected.len());
    for (p, f) in fit.peaks.iter().zip(&expected) {
        assert!((p.center - f).abs() < 1.0, "{p:?} vs {f}");
        assert!((p.fwhm - 25.0).abs() < 0.5, "{p:?}");
    }
}

#[test]
fn resolved_structure_of_153() {
    let table = table153();
    let grid = FrequencyGrid::spanning(-300.0, 900.0, 0.5).unwrap();
    let strong = table.distinct_frequencies(0.5, 0.5);
    let narrow = synthesize(&[(&table, 1.0)], &LineShape::lorentzian(25.0).unwrap(), &grid).unwrap();
    assert_eq!(resolved_count(&narrow, 0.3), strong.len());
    let broad = synthesize(&[(&table, 1.0)], &LineShape::lorentzian(100.0).unwrap(), &grid).unwrap();
    assert!(resolved_count(&broad, 0.3) < strong.len());
    let single = synthesize_lines(&[line(0.0, 1.0)], &LineShape::gaussian(25.0).unwrap(), &grid).unwrap();
    assert_eq!(resolved_count(&single, 0.3), 1);
}

#[test]
fn jitter_stays_within_instrumental_band() {
    let grid = FrequencyGrid::spanning(-300.0, 300.0, 0.5).unwrap();
    let shape = LineShape::lorentzian(25.0).unwrap();
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = synthesize_jittered(&[line(0.0, 1.0)], &shape, &grid, 5.0, &mut rng).unwrap();
        let fit = fit_peaks(&s, LineShapeKind::Lorentzian, 1).unwrap();
        assert!((20.0..=30.0).contains(&fit.peaks[0].fwhm), "{:?}", fit.peaks[0]);
    }
}

#[test]
fn satellite_pattern_fit() {
    let model = SatelliteModel::new(vec![SatelliteClass {
        label: "cl37".into(),
        positions: 2,
        abundance: 0.2424,
        shift: 60.0,
    }])
    .unwrap();
    let pattern: Vec<(f64, f64)> = apply_satellites(&[line(0.0, 1.0)], &model)
        .iter()
        .map(|l| (l.frequency, l.weight))
        .collect();
    assert_eq!(pattern.len(), 3);
    let lines = apply_satellites(&[line(0.0, 1.0), line(300.0, 0.6)], &model);
    let shape = LineShape::lorentzian(20.0).unwrap();
    let grid = FrequencyGrid::spanning(-200.0, 600.0, 0.5).unwrap();
    let s = synthesize_lines(&lines, &shape, &grid).unwrap();
    let opts = FitOptions {
        pattern,
        ..FitOptions::default()
    };
    let fit = fit_peaks_with(&s, LineShapeKind::Lorentzian, 2, &opts).unwrap();
    assert_eq!(fit.peaks.len(), 2);
    assert_relative_eq!(fit.peaks[0].center, 0.0, epsilon = 0.01);
    assert_relative_eq!(fit.peaks[1].center, 300.0, epsilon = 0.01);
    for p in &fit.peaks {
        assert_relative_eq!(p.fwhm, 20.0, epsilon = 0.01);
    }
    assert_relative_eq!(fit.peaks[1].amplitude, 0.6, epsilon = 1e-3);
    let bad = FitOptions {
        pattern: vec![(0.0, 0.5)],
        ..FitOptions::default()
    };
    assert!(fit_peaks_with(&s, LineShapeKind::Lorentzian, 2, &bad).is_err());
}

#[test]
fn csv_round_trip() {
    let grid = FrequencyGrid::spanning(-100.0, 100.0, 0.5).unwrap();
    let s = synthesize_lines(&[line(3.0, 2.0)], &LineShape::gaussian(25.0).unwrap(), &grid).unwrap();
    let back = Spectrum::from_csv(&s.to_csv()).unwrap();
    assert_eq!(back.grid.count, s.grid.count);
    for (a, b) in back.intensity().iter().zip(s.intensity()) {
        assert_relative_eq!(a, b, max_relative = 1e-15);
    }
    assert!(Spectrum::<f64>::from_csv("freq,int\n1,2\n").is_err());
}

#[test]
fn narrow_grid_is_rejected() {
    let grid = FrequencyGrid::spanning(-10.0, 10.0, 0.5).unwrap();
    assert!(synthesize_lines(&[line(0.0, 1.0)], &LineShape::lorentzian(25.0).unwrap(), &grid).is_err());
}

#[test]
fn single_precision_synthesis() {
    let grid = FrequencyGrid::<f32>::spanning(-300.0, 300.0, 0.5).unwrap();
    let s = synthesize_lines(
        &[WeightedLine {
            frequency: 0.0f32,
            weight: 1.0,
        }],
        &LineShape::gaussian(25.0f32).unwrap(),
        &grid,
    )
    .unwrap();
    assert!((s.area() - 1.0).abs() < 1e-4);
    let fit = fit_peaks(&s, LineShapeKind::Gaussian, 1).unwrap();
    assert!((fit.peaks[0].fwhm - 25.0).abs() < 0.1);
}

//! Per-subcommand computations. Each returns the artifacts to write and a
//! one-line report for the terminal.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::composition::Element;
use crate::error::{Error, Result};
use crate::holeburn::{self, ClassEnsemble};
use crate::interactions::{
    self, density_curve_csv, excitation_statistics, linewidth_vs_excited_density, non_interacting_fraction,
    pump_probe_spectrum, simulate_excitation, InteractionModel, Lattice, QUOTED_DIPOLE_RATIO,
};
use crate::levels::check_isotope_ratio;
use crate::memory::{required_depth, DepthBudget};
use crate::spectrum::{
    apply_satellites, fit_peaks_with, resolved_count, synthesize_jittered, synthesize_lines, table_lines, FitOptions,
    FrequencyGrid, WeightedLine,
};

use super::output::{derive_seed, Artifact, Format};
use super::scenario::Scenario;

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub report: String,
    pub summary: Value,
}

fn missing(section: &str) -> Error {
    Error::invalid(section, "section is missing from the scenario")
}

pub fn broaden(s: &Scenario, format: Format) -> Result<Outcome> {
    let b = &s.broadening;
    let report = b.model.total_linewidth(&s.composition, b.base)?;
    let mut summary = Map::new();
    for (k, v) in report.flat() {
        summary.insert(k, json!(v));
    }
    let residual_eu = report.element_total(Element::Eu);
    let residual_oh = report.element_total(Element::O) + report.element_total(Element::H);
    summary.insert(
        "residuals".into(),
        json!({
            "cl_mhz": report.element_total(Element::Cl),
            "eu_mhz": residual_eu,
            "o_h_mhz": residual_oh,
        }),
    );
    summary.insert("rule".into(), json!(report.rule));
    summary.insert("mass_convention".into(), json!(b.model.masses));
    summary.insert("deuterium_rate_mhz_per_percent".into(), json!(b.model.deuterium_rate));
    summary.insert("master_coefficient".into(), json!(b.model.master_coefficient()));
    summary.insert("largest".into(), json!(report.largest().map(|c| c.key())));
    if let Some(m) = b.measured {
        summary.insert("measured_mhz".into(), json!(m));
        summary.insert("consistent_with_measured".into(), json!(report.total <= m));
    }
    let mut artifacts = Vec::new();
    if let Some((element, mass_number, purities)) = &b.purity_scan {
        let points = b
            .model
            .broadening_vs_purity(&s.composition, *element, *mass_number, purities)?;
        let mut csv = String::from("purity,mhz\n");
        for p in &points {
            csv.push_str(&format!("{},{}\n", p.purity, p.mhz));
        }
        artifacts.push(Artifact::new("purity.csv", csv));
    }
    let summary = Value::Object(summary);
    artifacts.insert(0, Artifact::summary("broaden", &summary, format));
    Ok(Outcome {
        artifacts,
        report: format!(
            "broaden: total {:.2} MHz (Cl {:.2}, Eu {:.2}, O+H {:.2})",
            report.total,
            report.element_total(Element::Cl),
            residual_eu,
            residual_oh
        ),
        summary,
    })
}

/// Weighted lines of the scenario's spectrum before line-shape synthesis.
pub fn spectrum_lines(s: &Scenario) -> Result<Vec<WeightedLine<f64>>> {
    let levels = s.levels.as_ref().ok_or_else(|| missing("levels"))?;
    let cfg = s.spectrum.as_ref().ok_or_else(|| missing("spectrum"))?;
    let mut lines = Vec::new();
    for &iso in &cfg.isotopes {
        let weight = s.composition.abundance(Element::Eu, iso)?;
        lines.extend(table_lines(levels.table(iso), weight));
    }
    Ok(apply_satellites(&lines, &cfg.satellites)
        .into_iter()
        .filter(|l| l.weight > 0.0)
        .collect())
}

pub fn spectrum(s: &Scenario, seed: u64, format: Format) -> Result<Outcome> {
    let levels = s.levels.as_ref().ok_or_else(|| missing("levels"))?;
    let cfg = s.spectrum.as_ref().ok_or_else(|| missing("spectrum"))?;
    let lines = spectrum_lines(s)?;
    let shape = &s.lineshape;
    let margin = cfg.margin_fwhm * shape.fwhm;
    let lo = lines.iter().map(|l| l.frequency).fold(f64::INFINITY, f64::min) - margin;
    let hi = lines.iter().map(|l| l.frequency).fold(f64::NEG_INFINITY, f64::max) + margin;
    let lo = (lo / cfg.step).floor() * cfg.step;
    let grid = FrequencyGrid::spanning(lo, hi, cfg.step)?;
    let spec = match cfg.jitter_fwhm {
        Some(j) if j > 0.0 => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            synthesize_jittered(&lines, shape, &grid, j, &mut rng)?
        }
        _ => synthesize_lines(&lines, shape, &grid)?,
    };
    // each fitted component carries the satellite pattern of the scenario
    let unit = [WeightedLine {
        frequency: 0.0,
        weight: 1.0,
    }];
    let pattern: Vec<(f64, f64)> = apply_satellites(&unit, &cfg.satellites)
        .into_iter()
        .map(|l| (l.frequency, l.weight))
        .collect();
    let opts = FitOptions {
        pattern: pattern.clone(),
        ..FitOptions::default()
    };
    let fit = fit_peaks_with(&spec, shape.kind, cfg.max_peaks, &opts)?;
    let resolved = resolved_count(&spec, cfg.resolved_threshold);
    let envelope = spec.envelope_width(cfg.envelope_fraction);
    let ratio = check_isotope_ratio(&levels.eu151, &levels.eu153, 0.6)?;
    let table_json = |iso: u32| -> Value {
        levels
            .table(iso)
            .entries()
            .iter()
            .map(|t| {
                json!({
                    "ground": t.ground + 1,
                    "excited": t.excited + 1,
                    "frequency_mhz": t.frequency,
                    "strength": t.strength,
                })
            })
            .collect()
    };
    let summary = json!({
        "lineshape": { "kind": shape.kind.name(), "fwhm_mhz": shape.fwhm },
        "grid": { "start_mhz": grid.start, "step_mhz": grid.step, "count": grid.count },
        "isotopes": cfg.isotopes,
        "transitions": { "eu151": table_json(151), "eu153": table_json(153) },
        "satellites": cfg.satellites.classes,
        "fit_pattern": pattern.iter().map(|&(o, f)| json!({"offset_mhz": o, "fraction": f})).collect::<Vec<_>>(),
        "line_count": lines.len(),
        "resolved_count": resolved,
        "resolved_threshold": cfg.resolved_threshold,
        "envelope_width_mhz": envelope,
        "envelope_fraction": cfg.envelope_fraction,
        "jitter_fwhm_mhz": cfg.jitter_fwhm,
        "fit": fit,
        "isotope_ratio": ratio,
    });
    Ok(Outcome {
        artifacts: vec![
            Artifact::new("spectrum.csv", spec.to_csv()),
            Artifact::summary("spectrum_fit", &summary, format),
        ],
        report: format!(
            "spectrum: {} points, envelope {:.1} MHz, {} resolved peaks, {} fitted",
            grid.count,
            envelope,
            resolved,
            fit.peaks.len()
        ),
        summary,
    })
}

pub fn pump(s: &Scenario, format: Format) -> Result<Outcome> {
    let levels = s.levels.as_ref().ok_or_else(|| missing("levels"))?;
    let p = s.pump.as_ref().ok_or_else(|| missing("pump"))?;
    let ensemble = ClassEnsemble::new(p.profile, p.classes, p.half_span, levels.table(p.isotope).clone())?;
    let prep = holeburn::prepare_population(&ensemble, &p.scenario)?;
    let isotope_fraction = s.composition.abundance(Element::Eu, p.isotope)?;
    let n_eu = holeburn::number_density(p.density, p.molar_mass)?;
    let sigma = holeburn::peak_cross_section(p.oscillator_strength, p.profile.fwhm, p.profile.kind)?;
    let alpha = holeburn::optical_depth(
        prep.center_fraction.max(f64::MIN_POSITIVE),
        p.oscillator_strength,
        n_eu * isotope_fraction,
        p.profile.fwhm,
        p.profile.kind,
    )?;
    let summary = json!({
        "global_fraction": prep.global_fraction,
        "center_fraction": prep.center_fraction,
        "alpha_cm1": alpha,
        "targets": { "global_fraction": 0.90, "center_fraction": 0.98, "alpha_cm1": 4000.0 },
        "meets_targets": prep.global_fraction > 0.90 && prep.center_fraction > 0.98,
        "inputs": {
            "isotope": p.isotope,
            "bands_mhz": p.scenario.bands.iter().map(|b| [b.lo, b.hi]).collect::<Vec<_>>(),
            "pump_rate": p.scenario.pump_rate,
            "rf_rate": p.scenario.rf_rate,
            "t1_s": p.scenario.t1,
            "beta": p.scenario.beta,
            "hyperfine_relaxation": p.scenario.hyperfine_relaxation,
            "profile": p.profile.kind.name(),
            "inhomogeneous_fwhm_mhz": p.profile.fwhm,
            "classes": p.classes,
            "half_span_mhz": p.half_span,
            "oscillator_strength": p.oscillator_strength,
            "density_g_cm3": p.density,
            "molar_mass_g_mol": p.molar_mass,
            "eu_number_density_cm3": n_eu,
            "isotope_fraction": isotope_fraction,
            "peak_cross_section_cm2": sigma,
            "prepared_fraction_used": "center_fraction",
        },
    });
    Ok(Outcome {
        artifacts: vec![
            Artifact::summary("pump", &summary, format),
            Artifact::new("pump_curve.csv", prep.curve_csv()),
        ],
        report: format!(
            "pump: global g3 fraction {:.4}, line center {:.4}, alpha {:.1} cm^-1 (f = {:e}, N = {:e} cm^-3, FWHM {} MHz)",
            prep.global_fraction,
            prep.center_fraction,
            alpha,
            p.oscillator_strength,
            n_eu * isotope_fraction,
            p.profile.fwhm
        ),
        summary,
    })
}

pub fn memory(s: &Scenario, pump_summary: Option<&Value>, format: Format) -> Result<Outcome> {
    let m = s.memory.as_ref().ok_or_else(|| missing("memory"))?;
    let (alpha, source) = match m.alpha {
        Some(a) => (a, "scenario"),
        None => {
            let v = pump_summary
                .and_then(|p| p["alpha_cm1"].as_f64())
                .ok_or_else(|| missing("pump"))?;
            (v, "pump")
        }
    };
    let budget = DepthBudget::new(alpha, m.length)?;
    let d_needed = required_depth(m.target_efficiency)?;
    let summary = json!({
        "alpha_cm1": alpha,
        "alpha_source": source,
        "length_cm": m.length,
        "d": budget.depth(),
        "eta": budget.efficiency(),
        "absorbed": budget.absorbed(),
        "target_efficiency": m.target_efficiency,
        "required_depth": d_needed,
        "required_length_cm": if alpha > 0.0 { Some(d_needed / alpha) } else { None },
    });
    Ok(Outcome {
        artifacts: vec![Artifact::summary("memory", &summary, format)],
        report: format!(
            "memory: d = {:.3}, efficiency {:.4}, absorbed {:.4}",
            budget.depth(),
            budget.efficiency(),
            budget.absorbed()
        ),
        summary,
    })
}

pub fn blockade(s: &Scenario, seed: u64, format: Format) -> Result<Outcome> {
    let b = s.blockade.as_ref().ok_or_else(|| missing("blockade"))?;
    let lattice_seed = derive_seed(seed, "lattice");
    let lattice = Lattice::supercell(&b.geometry, b.supercell, &b.model, b.cutoff, b.detuning, lattice_seed)?;
    let free = Lattice::supercell(
        &b.geometry,
        b.supercell,
        &InteractionModel::non_interacting(),
        b.cutoff,
        b.detuning,
        lattice_seed,
    )?;
    let kmc_seed = derive_seed(seed, "kmc");
    let interacting = excitation_statistics(&lattice, &b.kmc, &b.drive, kmc_seed, b.trajectories)?;
    let baseline = excitation_statistics(&free, &b.kmc, &b.drive, kmc_seed, b.trajectories)?;
    let analytic = non_interacting_fraction(&free, &b.kmc, &b.drive);
    let first = simulate_excitation(
        &lattice,
        &b.kmc,
        &b.drive,
        interactions::kmc::trajectory_seed(kmc_seed, 0),
    )?;

    let f0 = b.drive.frequency;
    let probe_grid = FrequencyGrid::spanning(f0 - b.probe_span, f0 + b.probe_span, b.probe_step)?;
    let pp = pump_probe_spectrum(
        &lattice,
        &b.kmc,
        &b.drive,
        &b.probe,
        &probe_grid,
        derive_seed(seed, "pump-probe"),
        b.trajectories,
    )?;
    let mut pp_csv = String::from("freq_mhz,unpumped,pumped,difference\n");
    for (k, x) in probe_grid.values().enumerate() {
        pp_csv.push_str(&format!(
            "{},{},{},{}\n",
            x,
            pp.unpumped.intensity()[k],
            pp.pumped.intensity()[k],
            pp.difference.values[k]
        ));
    }

    let max_shift = (0..lattice.len())
        .map(|i| lattice.neighbors(i).iter().map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let half = 5.0 * b.inhomogeneous.fwhm + max_shift;
    let density_grid = FrequencyGrid::spanning(-half, half, b.probe_step)?;
    let curve = linewidth_vs_excited_density(
        &lattice,
        &b.inhomogeneous,
        &b.densities,
        &density_grid,
        derive_seed(seed, "density"),
        b.realizations,
    )?;

    let axis_shell = b.geometry.c2_axis;
    let first_shell = crate::composition::neighbor_shells(&b.geometry, b.cutoff)?
        .into_iter()
        .find(|sh| {
            sh.directions
                .iter()
                .any(|d| (d[0] * axis_shell[0] + d[1] * axis_shell[1] + d[2] * axis_shell[2]).abs() > 1.0 - 1e-6)
        });
    let along_axis = first_shell.as_ref().map(|sh| {
        json!({
            "distance_angstrom": sh.distance,
            "far_field_mhz": b.model.far_field(sh.distance, 0.0),
            "shift_used_mhz": b.model.diagonal_shift(sh.distance, 0.0),
        })
    });
    let radius = b.model.blockade_radius(b.blockade_threshold, 0.0).ok();
    let ratio = b.model.dipole_ratio();
    let summary = json!({
        "sites": lattice.len(),
        "supercell": b.supercell,
        "cutoff_angstrom": b.cutoff,
        "lattice_file": b.lattice_file.to_string_lossy(),
        "dipole_ratio": ratio,
        "dipole_ratio_quoted": QUOTED_DIPOLE_RATIO,
        "dipole_ratio_note": format!(
            "computed (d_static/d_trans)^2 = {ratio:.2}; the commonly quoted {QUOTED_DIPOLE_RATIO} is a rounding of this ratio"
        ),
        "t_max_mhz": b.model.t_max,
        "overrides": b.model.overrides,
        "nearest_along_c2": along_axis,
        "blockade_threshold_mhz": b.blockade_threshold,
        "blockade_radius_angstrom": radius,
        "drive": b.drive,
        "excitation": {
            "interacting": interacting,
            "non_interacting": baseline,
            "non_interacting_analytic": analytic,
            "suppression": if baseline.mean > 0.0 { Some(interacting.mean / baseline.mean) } else { None },
        },
        "pump_probe": {
            "excited_fraction": pp.excitation.mean,
            "difference_min": pp.difference.values.iter().copied().fold(f64::INFINITY, f64::min),
            "difference_max": pp.difference.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        },
        "linewidth_vs_density": curve,
    });
    Ok(Outcome {
        artifacts: vec![
            Artifact::summary("blockade", &summary, format),
            Artifact::new("blockade_events.csv", first.events_csv()),
            Artifact::new("pump_probe.csv", pp_csv),
            Artifact::new("linewidth_density.csv", density_curve_csv(&curve)),
        ],
        report: format!(
            "blockade: {} sites, excited fraction {:.4} ± {:.4} (independent ions {:.4}), dipole ratio {:.2}",
            lattice.len(),
            interacting.mean,
            interacting.std_error,
            analytic,
            ratio
        ),
        summary,
    })
}

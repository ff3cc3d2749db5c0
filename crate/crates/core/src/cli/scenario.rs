//! TOML scenario schema. Everything is parsed and validated up front into
//! typed model objects; errors name the offending key path.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::broadening::{BroadeningModel, CombinationRule, MassConvention};
use crate::composition::{CrystalComposition, Element, LatticeGeometry};
use crate::error::{Error, Result};
use crate::holeburn::{Band, PumpScenario};
use crate::interactions::{DetuningModel, Drive, InteractionModel, KmcConfig, ShellOverride};
use crate::levels::{build_transitions, IsotopeLevelSet, LevelScheme, Manifold, TransitionTable};
use crate::spectrum::{LineShape, LineShapeKind, SatelliteClass, SatelliteModel};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    composition: RawComposition,
    #[serde(default)]
    broadening: RawBroadening,
    levels: Option<RawLevels>,
    lineshape: Option<RawLineShape>,
    spectrum: Option<RawSpectrum>,
    pump: Option<RawPump>,
    blockade: Option<RawBlockade>,
    memory: Option<RawMemory>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComposition {
    #[serde(default)]
    abundances: Vec<RawAbundance>,
    #[serde(default)]
    purify: Vec<RawPurify>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAbundance {
    element: String,
    mass_number: u32,
    abundance: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPurify {
    element: String,
    mass_number: u32,
    purity: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBroadening {
    deuterium_rate_mhz_per_percent: Option<f64>,
    rule: Option<CombinationRule>,
    mass_convention: Option<MassConvention>,
    base_mhz: Option<f64>,
    measured_mhz: Option<f64>,
    purity_scan: Option<RawPurityScan>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPurityScan {
    element: String,
    mass_number: u32,
    purities: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLevels {
    isotope_shift_mhz: f64,
    strengths: [[f64; 3]; 3],
    eu151: RawIsotopeLevels,
    eu153: RawIsotopeLevels,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIsotopeLevels {
    ground_mhz: [f64; 3],
    excited_mhz: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLineShape {
    kind: String,
    fwhm_mhz: f64,
    eta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectrum {
    #[serde(default = "default_isotopes")]
    isotopes: Vec<u32>,
    step_mhz: f64,
    #[serde(default = "default_margin")]
    margin_fwhm: f64,
    #[serde(default)]
    satellites: Vec<RawSatellite>,
    max_peaks: usize,
    #[serde(default = "default_threshold")]
    resolved_threshold: f64,
    #[serde(default = "default_envelope")]
    envelope_fraction: f64,
    jitter_fwhm_mhz: Option<f64>,
}

fn default_isotopes() -> Vec<u32> {
    vec![151, 153]
}
fn default_margin() -> f64 {
    6.0
}
fn default_threshold() -> f64 {
    0.3
}
fn default_envelope() -> f64 {
    0.5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSatellite {
    label: String,
    element: String,
    mass_number: u32,
    positions: u32,
    shift_mhz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPump {
    #[serde(default = "default_pump_isotope")]
    isotope: u32,
    bands_mhz: Vec<[f64; 2]>,
    pump_rate: f64,
    rf_rate: f64,
    #[serde(default = "default_t1")]
    t1_s: f64,
    #[serde(default = "default_beta")]
    beta: [f64; 3],
    #[serde(default)]
    hyperfine_relaxation: f64,
    soft_edge_mhz: Option<f64>,
    #[serde(default = "default_inhomogeneous")]
    inhomogeneous_fwhm_mhz: f64,
    #[serde(default = "default_profile")]
    profile: String,
    #[serde(default = "default_classes")]
    classes: usize,
    half_span_mhz: f64,
    #[serde(default = "default_f")]
    oscillator_strength: f64,
    #[serde(default = "default_density")]
    density_g_cm3: f64,
    #[serde(default = "default_molar_mass")]
    molar_mass_g_mol: f64,
}

fn default_pump_isotope() -> u32 {
    153
}
fn default_t1() -> f64 {
    2e-3
}
fn default_beta() -> [f64; 3] {
    [1.0 / 3.0; 3]
}
fn default_inhomogeneous() -> f64 {
    25.0
}
fn default_profile() -> String {
    "lorentzian".into()
}
fn default_classes() -> usize {
    1001
}
fn default_f() -> f64 {
    3e-9
}
fn default_density() -> f64 {
    2.42
}
fn default_molar_mass() -> f64 {
    366.4
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlockade {
    lattice_file: PathBuf,
    supercell: [usize; 3],
    cutoff_angstrom: f64,
    d_static: Option<f64>,
    d_trans: Option<f64>,
    t_max_mhz: Option<f64>,
    #[serde(default)]
    overrides: Vec<RawOverride>,
    detuning: DetuningModel,
    homogeneous_fwhm_mhz: f64,
    #[serde(default = "default_t1")]
    t1_s: f64,
    drive: RawDrive,
    trajectories: usize,
    probe_fwhm_mhz: f64,
    probe_span_mhz: f64,
    probe_step_mhz: f64,
    densities: Vec<f64>,
    realizations: usize,
    #[serde(default = "default_inhomogeneous")]
    inhomogeneous_fwhm_mhz: f64,
    #[serde(default = "default_inhomogeneous")]
    blockade_threshold_mhz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOverride {
    distance_angstrom: f64,
    shift_mhz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    frequency_mhz: f64,
    rate: f64,
    duration_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMemory {
    length_cm: f64,
    #[serde(default = "default_target")]
    target_efficiency: f64,
    alpha_cm1: Option<f64>,
}

fn default_target() -> f64 {
    0.9
}

/// Validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub composition: CrystalComposition<f64>,
    pub broadening: BroadeningConfig,
    pub levels: Option<LevelsConfig>,
    pub lineshape: LineShape<f64>,
    pub spectrum: Option<SpectrumConfig>,
    pub pump: Option<PumpConfig>,
    pub blockade: Option<BlockadeConfig>,
    pub memory: Option<MemoryConfig>,
}

#[derive(Debug, Clone)]
pub struct BroadeningConfig {
    pub model: BroadeningModel<f64>,
    pub base: f64,
    pub measured: Option<f64>,
    pub purity_scan: Option<(Element, u32, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub struct LevelsConfig {
    pub eu151: IsotopeLevelSet<f64>,
    pub eu153: IsotopeLevelSet<f64>,
    pub strengths: [[f64; 3]; 3],
    pub table151: TransitionTable<f64>,
    pub table153: TransitionTable<f64>,
}

impl LevelsConfig {
    pub fn table(&self, isotope: u32) -> &TransitionTable<f64> {
        if isotope == 151 {
            &self.table151
        } else {
            &self.table153
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumConfig {
    pub isotopes: Vec<u32>,
    pub step: f64,
    pub margin_fwhm: f64,
    pub satellites: SatelliteModel<f64>,
    pub max_peaks: usize,
    pub resolved_threshold: f64,
    pub envelope_fraction: f64,
    pub jitter_fwhm: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PumpConfig {
    pub isotope: u32,
    pub scenario: PumpScenario<f64>,
    pub profile: LineShape<f64>,
    pub classes: usize,
    pub half_span: f64,
    pub oscillator_strength: f64,
    pub density: f64,
    pub molar_mass: f64,
}

#[derive(Debug, Clone)]
pub struct BlockadeConfig {
    pub geometry: LatticeGeometry<f64>,
    pub lattice_file: PathBuf,
    pub supercell: [usize; 3],
    pub cutoff: f64,
    pub model: InteractionModel<f64>,
    pub detuning: DetuningModel,
    pub kmc: KmcConfig,
    pub drive: Drive,
    pub trajectories: usize,
    pub probe: LineShape<f64>,
    pub probe_span: f64,
    pub probe_step: f64,
    pub densities: Vec<f64>,
    pub realizations: usize,
    pub inhomogeneous: LineShape<f64>,
    pub blockade_threshold: f64,
}

#[derive(Debug, Clone)]
pub struct MemoryConfig {
    pub length: f64,
    pub target_efficiency: f64,
    pub alpha: Option<f64>,
}

/// Prefixes the key path of validation errors raised inside a section.
fn within(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } if !name.starts_with(&format!("{section}.")) => {
            Error::InvalidParameter {
                name: format!("{section}.{name}"),
                reason,
            }
        }
        other => other,
    }
}

fn element(key: &str, s: &str) -> Result<Element> {
    s.parse()
        .map_err(|_| Error::invalid(key, format!("unknown element `{s}`")))
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(key, format!("{v} must be > 0")))
    }
}

fn shape(key: &str, kind: &str, fwhm: f64, eta: Option<f64>) -> Result<LineShape<f64>> {
    let kind = match (kind, eta) {
        ("lorentzian", None) => LineShapeKind::Lorentzian,
        ("gaussian", None) => LineShapeKind::Gaussian,
        ("pseudo-voigt", Some(eta)) => LineShapeKind::PseudoVoigt { eta },
        ("pseudo-voigt", None) => return Err(Error::invalid(format!("{key}.eta"), "required for pseudo-voigt")),
        ("lorentzian" | "gaussian", Some(_)) => {
            return Err(Error::invalid(format!("{key}.eta"), "only valid for pseudo-voigt"))
        }
        (other, _) => {
            return Err(Error::invalid(
                format!("{key}.kind"),
                format!("`{other}` is not one of lorentzian, gaussian, pseudo-voigt"),
            ))
        }
    };
    LineShape::new(kind, fwhm).map_err(|e| within(key, e))
}

impl Scenario {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid("scenario", format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses scenario text; relative file references resolve against
    /// `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: Raw = toml::from_str(text).map_err(|e| Error::invalid("scenario", e.message().to_string()))?;

        let mut composition = CrystalComposition::natural();
        for (k, a) in raw.composition.abundances.iter().enumerate() {
            let key = format!("composition.abundances[{k}]");
            let el = element(&key, &a.element)?;
            let mut list: Vec<(u32, f64)> = raw
                .composition
                .abundances
                .iter()
                .filter(|b| b.element == a.element)
                .map(|b| (b.mass_number, b.abundance))
                .collect();
            list.dedup();
            composition = composition.with_abundances(el, &list).map_err(|e| within(&key, e))?;
        }
        for (k, p) in raw.composition.purify.iter().enumerate() {
            let key = format!("composition.purify[{k}]");
            let el = element(&key, &p.element)?;
            composition = composition
                .purify(el, p.mass_number, p.purity)
                .map_err(|e| within(&key, e))?;
        }

        let b = &raw.broadening;
        let model = BroadeningModel::new(
            b.deuterium_rate_mhz_per_percent.unwrap_or(91.0),
            b.rule.unwrap_or(CombinationRule::Linear),
            b.mass_convention.unwrap_or(MassConvention::MassNumber),
        )
        .map_err(|_| Error::invalid("broadening.deuterium_rate_mhz_per_percent", "must be > 0"))?;
        let base = b.base_mhz.unwrap_or(0.0);
        if !(base >= 0.0) {
            return Err(Error::invalid("broadening.base_mhz", format!("{base} must be ≥ 0")));
        }
        if let Some(m) = b.measured_mhz {
            positive("broadening.measured_mhz", m)?;
        }
        let purity_scan = match &b.purity_scan {
            None => None,
            Some(s) => {
                let el = element("broadening.purity_scan.element", &s.element)?;
                if s.purities.is_empty() {
                    return Err(Error::invalid("broadening.purity_scan.purities", "must not be empty"));
                }
                for (k, &p) in s.purities.iter().enumerate() {
                    composition
                        .purify(el, s.mass_number, p)
                        .map_err(|e| within(&format!("broadening.purity_scan.purities[{k}]"), e))?;
                }
                Some((el, s.mass_number, s.purities.clone()))
            }
        };
        // fails early on unknown dominant isotopes
        model
            .total_linewidth(&composition, base)
            .map_err(|e| within("broadening", e))?;
        let broadening = BroadeningConfig {
            model,
            base,
            measured: b.measured_mhz,
            purity_scan,
        };

        let levels = raw.levels.as_ref().map(parse_levels).transpose()?;

        let lineshape = match &raw.lineshape {
            Some(l) => shape("lineshape", &l.kind, l.fwhm_mhz, l.eta)?,
            None => LineShape::lorentzian(25.0)?,
        };

        let spectrum = match &raw.spectrum {
            None => None,
            Some(s) => {
                if levels.is_none() {
                    return Err(Error::invalid("levels", "section is required by [spectrum]"));
                }
                Some(parse_spectrum(s, &composition)?)
            }
        };

        let pump = match &raw.pump {
            None => None,
            Some(p) => {
                if levels.is_none() {
                    return Err(Error::invalid("levels", "section is required by [pump]"));
                }
                Some(parse_pump(p)?)
            }
        };

        let blockade = raw.blockade.as_ref().map(|b| parse_blockade(b, base_dir)).transpose()?;

        let memory = match &raw.memory {
            None => None,
            Some(m) => {
                positive("memory.length_cm", m.length_cm)?;
                if !(0.0..1.0).contains(&m.target_efficiency) {
                    return Err(Error::invalid(
                        "memory.target_efficiency",
                        format!("{} must lie in [0, 1)", m.target_efficiency),
                    ));
                }
                if let Some(a) = m.alpha_cm1 {
                    if !(a >= 0.0 && a.is_finite()) {
                        return Err(Error::invalid("memory.alpha_cm1", format!("{a} must be ≥ 0")));
                    }
                } else if pump.is_none() {
                    return Err(Error::invalid(
                        "memory.alpha_cm1",
                        "required when there is no [pump] section",
                    ));
                }
                Some(MemoryConfig {
                    length: m.length_cm,
                    target_efficiency: m.target_efficiency,
                    alpha: m.alpha_cm1,
                })
            }
        };

        Ok(Scenario {
            seed: raw.seed.unwrap_or(0),
            output_dir: raw.output_dir,
            composition,
            broadening,
            levels,
            lineshape,
            spectrum,
            pump,
            blockade,
            memory,
        })
    }
}

fn parse_levels(l: &RawLevels) -> Result<LevelsConfig> {
    let scheme = |key: &str, m: Manifold, e: [f64; 3]| LevelScheme::new(m, e).map_err(|err| within(key, err));
    let eu151 = IsotopeLevelSet::new(
        151,
        scheme("levels.eu151.ground_mhz", Manifold::Ground, l.eu151.ground_mhz)?,
        scheme("levels.eu151.excited_mhz", Manifold::Excited, l.eu151.excited_mhz)?,
        0.0,
    )?;
    if !l.isotope_shift_mhz.is_finite() {
        return Err(Error::invalid("levels.isotope_shift_mhz", "must be finite"));
    }
    let eu153 = IsotopeLevelSet::new(
        153,
        scheme("levels.eu153.ground_mhz", Manifold::Ground, l.eu153.ground_mhz)?,
        scheme("levels.eu153.excited_mhz", Manifold::Excited, l.eu153.excited_mhz)?,
        l.isotope_shift_mhz,
    )?;
    let table151 = build_transitions(&eu151, &l.strengths).map_err(|e| within("levels.strengths", e))?;
    let table153 = build_transitions(&eu153, &l.strengths).map_err(|e| within("levels.strengths", e))?;
    Ok(LevelsConfig {
        eu151,
        eu153,
        strengths: l.strengths,
        table151,
        table153,
    })
}

fn parse_spectrum(s: &RawSpectrum, composition: &CrystalComposition<f64>) -> Result<SpectrumConfig> {
    if s.isotopes.is_empty() {
        return Err(Error::invalid("spectrum.isotopes", "must not be empty"));
    }
    for &iso in &s.isotopes {
        if iso != 151 && iso != 153 {
            return Err(Error::invalid("spectrum.isotopes", format!("{iso} is not 151 or 153")));
        }
    }
    positive("spectrum.step_mhz", s.step_mhz)?;
    positive("spectrum.margin_fwhm", s.margin_fwhm)?;
    if s.max_peaks == 0 {
        return Err(Error::invalid("spectrum.max_peaks", "must be ≥ 1"));
    }
    for (key, v) in [
        ("spectrum.resolved_threshold", s.resolved_threshold),
        ("spectrum.envelope_fraction", s.envelope_fraction),
    ] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::invalid(key, format!("{v} must lie in (0, 1)")));
        }
    }
    if let Some(j) = s.jitter_fwhm_mhz {
        if !(j >= 0.0 && j.is_finite()) {
            return Err(Error::invalid("spectrum.jitter_fwhm_mhz", format!("{j} must be ≥ 0")));
        }
    }
    let mut classes = Vec::new();
    for (k, sat) in s.satellites.iter().enumerate() {
        let key = format!("spectrum.satellites[{k}]");
        let el = element(&format!("{key}.element"), &sat.element)?;
        let abundance = composition
            .abundance(el, sat.mass_number)
            .map_err(|e| within(&key, e))?;
        if !sat.shift_mhz.is_finite() {
            return Err(Error::invalid(format!("{key}.shift_mhz"), "must be finite"));
        }
        classes.push(SatelliteClass {
            label: sat.label.clone(),
            positions: sat.positions,
            abundance,
            shift: sat.shift_mhz,
        });
    }
    let satellites = SatelliteModel::new(classes).map_err(|e| within("spectrum", e))?;
    Ok(SpectrumConfig {
        isotopes: s.isotopes.clone(),
        step: s.step_mhz,
        margin_fwhm: s.margin_fwhm,
        satellites,
        max_peaks: s.max_peaks,
        resolved_threshold: s.resolved_threshold,
        envelope_fraction: s.envelope_fraction,
        jitter_fwhm: s.jitter_fwhm_mhz,
    })
}

fn parse_pump(p: &RawPump) -> Result<PumpConfig> {
    if p.isotope != 151 && p.isotope != 153 {
        return Err(Error::invalid(
            "pump.isotope",
            format!("{} is not 151 or 153", p.isotope),
        ));
    }
    let bands = p
        .bands_mhz
        .iter()
        .enumerate()
        .map(|(k, b)| {
            Band::new(b[0], b[1])
                .map_err(|_| Error::invalid(format!("pump.bands_mhz[{k}]"), "empty or degenerate band"))
        })
        .collect::<Result<Vec<_>>>()?;
    let scenario = PumpScenario {
        bands,
        pump_rate: p.pump_rate,
        rf_rate: p.rf_rate,
        t1: p.t1_s,
        beta: p.beta,
        hyperfine_relaxation: p.hyperfine_relaxation,
        soft_edge: p.soft_edge_mhz,
    };
    scenario.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => Error::InvalidParameter {
            name: match name.as_str() {
                "pump.t1" => "pump.t1_s".into(),
                _ => name,
            },
            reason,
        },
        other => other,
    })?;
    let profile = shape("pump", &p.profile, p.inhomogeneous_fwhm_mhz, None).map_err(|e| match e {
        Error::InvalidParameter { name, reason } if name == "pump.kind" => Error::InvalidParameter {
            name: "pump.profile".into(),
            reason,
        },
        Error::InvalidParameter { reason, .. } => Error::InvalidParameter {
            name: "pump.inhomogeneous_fwhm_mhz".into(),
            reason,
        },
        other => other,
    })?;
    if p.classes < 2 {
        return Err(Error::invalid("pump.classes", "need at least two classes"));
    }
    positive("pump.half_span_mhz", p.half_span_mhz)?;
    positive("pump.oscillator_strength", p.oscillator_strength)?;
    positive("pump.density_g_cm3", p.density_g_cm3)?;
    positive("pump.molar_mass_g_mol", p.molar_mass_g_mol)?;
    Ok(PumpConfig {
        isotope: p.isotope,
        scenario,
        profile,
        classes: p.classes,
        half_span: p.half_span_mhz,
        oscillator_strength: p.oscillator_strength,
        density: p.density_g_cm3,
        molar_mass: p.molar_mass_g_mol,
    })
}

fn parse_blockade(b: &RawBlockade, base_dir: &Path) -> Result<BlockadeConfig> {
    let path = base_dir.join(&b.lattice_file);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::invalid("blockade.lattice_file", format!("cannot read {}: {e}", path.display())))?;
    let geometry = LatticeGeometry::from_toml(&text).map_err(|e| within("blockade.lattice_file", e))?;
    let defaults = InteractionModel::<f64>::default();
    let overrides = b
        .overrides
        .iter()
        .map(|o| ShellOverride {
            distance: o.distance_angstrom,
            shift: o.shift_mhz,
        })
        .collect();
    let model = InteractionModel {
        d_static: b.d_static.unwrap_or(defaults.d_static),
        d_trans: b.d_trans.unwrap_or(defaults.d_trans),
        overrides,
        t_max: b.t_max_mhz.unwrap_or(defaults.t_max),
    };
    model.validate()?;
    positive("blockade.cutoff_angstrom", b.cutoff_angstrom)?;
    if b.supercell.contains(&0) {
        return Err(Error::invalid("blockade.supercell", "repetitions must be ≥ 1"));
    }
    let spacings = geometry.plane_spacings();
    for (k, (spacing, reps)) in spacings.iter().zip(b.supercell).enumerate() {
        if spacing * (reps as f64) < 2.0 * b.cutoff_angstrom {
            return Err(Error::invalid(
                "blockade.supercell",
                format!("axis {k} is narrower than twice cutoff_angstrom"),
            ));
        }
    }
    b.detuning.validate()?;
    let kmc = KmcConfig {
        homogeneous_fwhm: b.homogeneous_fwhm_mhz,
        t1: b.t1_s,
        record_shifts: false,
    };
    kmc.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } if name == "blockade.t1" => Error::InvalidParameter {
            name: "blockade.t1_s".into(),
            reason,
        },
        other => other,
    })?;
    let drive = Drive {
        frequency: b.drive.frequency_mhz,
        rate: b.drive.rate,
        duration: b.drive.duration_s,
    };
    drive.validate().map_err(|e| within("blockade", e))?;
    if b.trajectories == 0 {
        return Err(Error::invalid("blockade.trajectories", "must be ≥ 1"));
    }
    if b.realizations == 0 {
        return Err(Error::invalid("blockade.realizations", "must be ≥ 1"));
    }
    let probe = LineShape::lorentzian(b.probe_fwhm_mhz)
        .map_err(|_| Error::invalid("blockade.probe_fwhm_mhz", format!("{} must be > 0", b.probe_fwhm_mhz)))?;
    positive("blockade.probe_span_mhz", b.probe_span_mhz)?;
    positive("blockade.probe_step_mhz", b.probe_step_mhz)?;
    if b.probe_step_mhz * 2.0 > b.probe_span_mhz {
        return Err(Error::invalid(
            "blockade.probe_step_mhz",
            "too coarse for the probe span",
        ));
    }
    if b.densities.is_empty() {
        return Err(Error::invalid("blockade.densities", "must not be empty"));
    }
    for (k, &d) in b.densities.iter().enumerate() {
        if !(0.0..=1.0).contains(&d) {
            return Err(Error::invalid(
                format!("blockade.densities[{k}]"),
                format!("{d} outside [0, 1]"),
            ));
        }
    }
    let inhomogeneous = LineShape::gaussian(b.inhomogeneous_fwhm_mhz)
        .map_err(|_| Error::invalid("blockade.inhomogeneous_fwhm_mhz", "must be > 0"))?;
    positive("blockade.blockade_threshold_mhz", b.blockade_threshold_mhz)?;
    Ok(BlockadeConfig {
        geometry,
        lattice_file: b.lattice_file.clone(),
        supercell: b.supercell,
        cutoff: b.cutoff_angstrom,
        model,
        detuning: b.detuning,
        kmc,
        drive,
        trajectories: b.trajectories,
        probe,
        probe_span: b.probe_span_mhz,
        probe_step: b.probe_step_mhz,
        densities: b.densities.clone(),
        realizations: b.realizations,
        inhomogeneous,
        blockade_threshold: b.blockade_threshold_mhz,
    })
}

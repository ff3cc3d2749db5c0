use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectrum::{fit_peaks, FrequencyGrid, LineShape, Spectrum};

use super::kmc::{simulate_excitation, trajectory_seed, Drive, ExcitationStats, KmcConfig};
use super::Lattice;

/// Trajectories per work unit; partial sums are combined in unit order so
/// results do not depend on the thread count.
const CHUNK: usize = 64;

/// Pointwise difference of two spectra on the same grid; may be negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceSpectrum {
    pub grid: FrequencyGrid<f64>,
    pub values: Vec<f64>,
}

impl DifferenceSpectrum {
    pub fn value_at(&self, freq: f64) -> f64 {
        self.values[nearest(&self.grid, freq)]
    }

    /// CSV with header `freq_mhz,difference`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_mhz,difference\n");
        for (x, y) in self.grid.values().zip(&self.values) {
            out.push_str(&format!("{x},{y}\n"));
        }
        out
    }
}

pub(crate) fn nearest(grid: &FrequencyGrid<f64>, freq: f64) -> usize {
    let k = ((freq - grid.start) / grid.step).round();
    k.clamp(0.0, (grid.count - 1) as f64) as usize
}

/// Probe absorption of one configuration: every ground ion contributes a
/// `probe` line at its detuning plus its current shift. Normalized per site.
pub fn probe_absorption(
    lattice: &Lattice,
    excited: &[bool],
    shifts: &[f64],
    probe: &LineShape<f64>,
    grid: &FrequencyGrid<f64>,
) -> Vec<f64> {
    let mut y = vec![0.0; grid.count];
    let norm = 1.0 / lattice.len() as f64;
    for i in (0..lattice.len()).filter(|&i| !excited[i]) {
        let center = lattice.detunings()[i] + shifts[i];
        for (k, v) in y.iter_mut().enumerate() {
            *v += norm * probe.eval(grid.value(k) - center);
        }
    }
    y
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PumpProbe {
    pub unpumped: Spectrum<f64>,
    pub pumped: Spectrum<f64>,
    /// pumped − unpumped
    pub difference: DifferenceSpectrum,
    /// Standard error of each pumped point over trajectories.
    pub std_error: Vec<f64>,
    pub excitation: ExcitationStats,
}

/// Runs the pump stage with KMC and probes the ground ions afterwards,
/// averaging over `trajectories` runs.
#[allow(clippy::too_many_arguments)]
pub fn pump_probe_spectrum(
    lattice: &Lattice,
    config: &KmcConfig,
    pump: &Drive,
    probe: &LineShape<f64>,
    grid: &FrequencyGrid<f64>,
    seed: u64,
    trajectories: usize,
) -> Result<PumpProbe> {
    if trajectories == 0 {
        return Err(Error::invalid("blockade.trajectories", "must be ≥ 1"));
    }
    let n = lattice.len();
    let unpumped = probe_absorption(lattice, &vec![false; n], &vec![0.0; n], probe, grid);
    let chunks: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..trajectories.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut sum = vec![0.0; grid.count];
            let mut sq = vec![0.0; grid.count];
            let mut fractions = Vec::new();
            for k in c * CHUNK..((c + 1) * CHUNK).min(trajectories) {
                let tr = simulate_excitation(lattice, config, pump, trajectory_seed(seed, k))?;
                let y = probe_absorption(lattice, &tr.excited, &tr.shifts, probe, grid);
                for ((s, q), v) in sum.iter_mut().zip(sq.iter_mut()).zip(&y) {
                    *s += v;
                    *q += v * v;
                }
                fractions.push(tr.excited_fraction());
            }
            Ok((sum, sq, fractions))
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![0.0; grid.count];
    let mut sq = vec![0.0; grid.count];
    let mut fractions = Vec::with_capacity(trajectories);
    for (s, q, f) in chunks {
        for k in 0..grid.count {
            sum[k] += s[k];
            sq[k] += q[k];
        }
        fractions.extend(f);
    }
    let m = trajectories as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let std_error = sq
        .iter()
        .zip(&mean)
        .map(|(q, mu)| {
            if trajectories < 2 {
                0.0
            } else {
                ((q / m - mu * mu).max(0.0) * m / (m - 1.0) / m).sqrt()
            }
        })
        .collect();
    let difference = DifferenceSpectrum {
        grid: *grid,
        values: mean.iter().zip(&unpumped).map(|(a, b)| a - b).collect(),
    };
    Ok(PumpProbe {
        unpumped: Spectrum::new(*grid, unpumped)?,
        pumped: Spectrum::new(*grid, mean.iter().map(|v| v.max(0.0)).collect())?,
        difference,
        std_error,
        excitation: ExcitationStats::from_samples(&fractions),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityPoint {
    pub density: f64,
    pub excited_sites: usize,
    /// Fitted FWHM of the ground-ion line; `None` when no ground ions remain.
    pub fwhm: Option<f64>,
    pub fwhm_err: Option<f64>,
}

/// Effective linewidth of the ground ions when a random fraction of sites is
/// excited. Each ground ion contributes the inhomogeneous profile displaced by
/// the shifts of its excited neighbors. Excited sets are nested across the
/// density grid within each realization (one random ordering of the sites
/// per realization) and spectra are averaged over realizations before a
/// single-component fit with the profile's shape.
pub fn linewidth_vs_excited_density(
    lattice: &Lattice,
    inhomogeneous: &LineShape<f64>,
    densities: &[f64],
    grid: &FrequencyGrid<f64>,
    seed: u64,
    realizations: usize,
) -> Result<Vec<DensityPoint>> {
    if realizations == 0 {
        return Err(Error::invalid("blockade.realizations", "must be ≥ 1"));
    }
    for (k, &rho) in densities.iter().enumerate() {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::invalid(
                format!("blockade.densities[{k}]"),
                format!("{rho} outside [0, 1]"),
            ));
        }
    }
    let n = lattice.len();
    let counts: Vec<usize> = densities.iter().map(|&rho| (rho * n as f64).round() as usize).collect();
    let partial: Vec<Vec<Vec<f64>>> = (0..realizations.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![vec![0.0; grid.count]; densities.len()];
            for r in c * CHUNK..((c + 1) * CHUNK).min(realizations) {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(trajectory_seed(seed, r)));
                for (d, &m) in counts.iter().enumerate() {
                    if m == n {
                        continue;
                    }
                    let mut excited = vec![false; n];
                    for &i in &order[..m] {
                        excited[i] = true;
                    }
                    let norm = 1.0 / (n - m) as f64;
                    for i in (0..n).filter(|&i| !excited[i]) {
                        let shift: f64 = lattice
                            .neighbors(i)
                            .iter()
                            .filter(|(j, _)| excited[*j])
                            .map(|(_, v)| v)
                            .sum();
                        for (k, y) in acc[d].iter_mut().enumerate() {
                            *y += norm * inhomogeneous.eval(grid.value(k) - shift);
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![vec![0.0; grid.count]; densities.len()];
    for acc in partial {
        for (t, a) in total.iter_mut().zip(acc) {
            for (x, y) in t.iter_mut().zip(a) {
                *x += y;
            }
        }
    }
    densities
        .iter()
        .zip(&counts)
        .zip(total)
        .map(|((&density, &m), sum)| {
            if m == n {
                return Ok(DensityPoint {
                    density,
                    excited_sites: m,
                    fwhm: None,
                    fwhm_err: None,
                });
            }
            let y = sum.into_iter().map(|v| v / realizations as f64).collect();
            let fit = fit_peaks(&Spectrum::new(*grid, y)?, inhomogeneous.kind, 1)?;
            Ok(DensityPoint {
                density,
                excited_sites: m,
                fwhm: Some(fit.peaks[0].fwhm),
                fwhm_err: Some(fit.peaks[0].fwhm_err),
            })
        })
        .collect()
}

/// CSV with header `density,excited_sites,fwhm_mhz,fwhm_err_mhz`.
pub fn density_curve_csv(points: &[DensityPoint]) -> String {
    let mut out = String::from("density,excited_sites,fwhm_mhz,fwhm_err_mhz\n");
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.density,
            p.excited_sites,
            opt(p.fwhm),
            opt(p.fwhm_err)
        ));
    }
    out
}

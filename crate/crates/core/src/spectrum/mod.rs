//! Excitation spectra: synthesis from transition tables, ligand-isotope
//! satellites, peak fitting and resolved-peak counting.

mod fit;
mod lineshape;
mod peaks;

pub use fit::{fit_peaks, fit_peaks_with, FitOptions, FitReport, FittedPeak};
pub use lineshape::{LineShape, LineShapeKind};
pub use peaks::{local_maxima, prominence, resolved_count};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levels::TransitionTable;
use crate::num::Real;

/// Uniform frequency grid in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid<T> {
    pub start: T,
    pub step: T,
    pub count: usize,
}

impl<T: Real> FrequencyGrid<T> {
    pub fn new(start: T, step: T, count: usize) -> Result<Self> {
        if !(step > T::zero()) {
            return Err(Error::invalid("grid.step", format!("{step} must be > 0")));
        }
        if count < 2 {
            return Err(Error::invalid("grid.count", "need at least two points"));
        }
        Ok(Self { start, step, count })
    }

    /// Grid covering `[lo, hi]` with spacing `step`.
    pub fn spanning(lo: T, hi: T, step: T) -> Result<Self> {
        let n = ((hi - lo) / step).ceil().to_usize().unwrap_or(0) + 1;
        Self::new(lo, step, n)
    }

    #[inline]
    pub fn value(&self, i: usize) -> T {
        self.start + self.step * T::from_usize_lossy(i)
    }

    pub fn end(&self) -> T {
        self.value(self.count - 1)
    }

    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.count).map(|i| self.value(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum<T> {
    pub grid: FrequencyGrid<T>,
    intensity: Vec<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn new(grid: FrequencyGrid<T>, intensity: Vec<T>) -> Result<Self> {
        if intensity.len() != grid.count {
            return Err(Error::invalid(
                "intensity",
                format!("{} values for {} grid points", intensity.len(), grid.count),
            ));
        }
        if let Some(bad) = intensity.iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(Error::invalid("intensity", format!("{bad} is negative or not finite")));
        }
        Ok(Self { grid, intensity })
    }

    pub fn zeros(grid: FrequencyGrid<T>) -> Self {
        Self {
            grid,
            intensity: vec![T::zero(); grid.count],
        }
    }

    pub fn intensity(&self) -> &[T] {
        &self.intensity
    }

    pub fn frequencies(&self) -> Vec<T> {
        self.grid.values().collect()
    }

    /// Trapezoid-rule area.
    pub fn area(&self) -> T {
        let y = &self.intensity;
        let inner = y[1..y.len() - 1].iter().fold(T::zero(), |s, &v| s + v);
        (inner + T::lit(0.5) * (y[0] + y[y.len() - 1])) * self.grid.step
    }

    /// Index and value of the global maximum.
    pub fn max(&self) -> (usize, T) {
        self.intensity.iter().enumerate().fold(
            (0, T::neg_infinity()),
            |best, (i, &v)| if v > best.1 { (i, v) } else { best },
        )
    }

    /// Width at half height of the peak at grid index `i`, interpolating the
    /// crossings linearly. `None` if the half-height level is not reached
    /// inside the grid.
    pub fn width_at_half(&self, i: usize) -> Option<T> {
        let y = &self.intensity;
        let half = y[i] * T::lit(0.5);
        let mut l = i;
        while l > 0 && y[l] > half {
            l -= 1;
        }
        let mut r = i;
        while r + 1 < y.len() && y[r] > half {
            r += 1;
        }
        if y[l] > half || y[r] > half {
            return None;
        }
        let cross = |a: usize, b: usize| {
            let (xa, xb) = (self.grid.value(a), self.grid.value(b));
            xa + (half - y[a]) * (xb - xa) / (y[b] - y[a])
        };
        Some(cross(r - 1, r) - cross(l + 1, l))
    }

    /// FWHM of the tallest feature.
    pub fn measured_fwhm(&self) -> Option<T> {
        self.width_at_half(self.max().0)
    }

    /// Distance between the outermost grid points whose intensity reaches
    /// `fraction` of the global maximum.
    pub fn envelope_width(&self, fraction: T) -> T {
        let level = self.max().1 * fraction;
        let first = self.intensity.iter().position(|&v| v >= level).unwrap_or(0);
        let last = self.intensity.iter().rposition(|&v| v >= level).unwrap_or(0);
        self.grid.value(last) - self.grid.value(first)
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::invalid("grid", "spectra are on different grids"));
        }
        Ok(())
    }

    pub fn added(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            intensity: self
                .intensity
                .iter()
                .zip(&other.intensity)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    /// Pointwise `self − other`; may be negative.
    pub fn difference(&self, other: &Self) -> Result<Vec<T>> {
        self.check_grid(other)?;
        Ok(self
            .intensity
            .iter()
            .zip(&other.intensity)
            .map(|(&a, &b)| a - b)
            .collect())
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            grid: self.grid,
            intensity: self.intensity.iter().map(|&v| v * s).collect(),
        }
    }

    /// CSV with header `freq_mhz,intensity`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_mhz,intensity\n");
        for (x, y) in self.grid.values().zip(&self.intensity) {
            out.push_str(&format!("{},{}\n", x.to_f64_lossy(), y.to_f64_lossy()));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("freq_mhz,intensity") => {}
            other => {
                return Err(Error::invalid(
                    "csv header",
                    format!("expected `freq_mhz,intensity`, found {other:?}"),
                ))
            }
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (n, line) in lines.enumerate() {
            let mut cols = line.split(',');
            let parse = |s: Option<&str>| -> Result<T> {
                s.and_then(|v| v.trim().parse::<f64>().ok())
                    .map(T::lit)
                    .ok_or_else(|| Error::invalid(format!("csv row {}", n + 2), "unparsable number"))
            };
            xs.push(parse(cols.next())?);
            ys.push(parse(cols.next())?);
        }
        if xs.len() < 2 {
            return Err(Error::Empty("spectrum csv"));
        }
        let step = xs[1] - xs[0];
        let grid = FrequencyGrid::new(xs[0], step, xs.len())?;
        let tol = step.abs() * T::lit(1e-6);
        if xs.iter().enumerate().any(|(i, &x)| (x - grid.value(i)).abs() > tol) {
            return Err(Error::invalid("freq_mhz", "grid is not uniform"));
        }
        Self::new(grid, ys)
    }
}

/// A single spectral line with its total weight (area).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedLine<T> {
    pub frequency: T,
    pub weight: T,
}

/// Lines of one transition table scaled by a population weight.
pub fn table_lines<T: Real>(table: &TransitionTable<T>, population: T) -> Vec<WeightedLine<T>> {
    table
        .entries()
        .iter()
        .map(|t| WeightedLine {
            frequency: t.frequency,
            weight: population * t.strength,
        })
        .collect()
}

/// Sums `weight × strength × shape(ν − f)` over every transition of every
/// table.
pub fn synthesize<T: Real>(
    tables: &[(&TransitionTable<T>, T)],
    shape: &LineShape<T>,
    grid: &FrequencyGrid<T>,
) -> Result<Spectrum<T>> {
    let mut lines = Vec::new();
    for (table, w) in tables {
        if !(*w >= T::zero()) {
            return Err(Error::invalid("population weight", format!("{w} must be ≥ 0")));
        }
        lines.extend(table_lines(table, *w));
    }
    synthesize_lines(&lines, shape, grid)
}

fn check_coverage<T: Real>(lines: &[WeightedLine<T>], shape: &LineShape<T>, grid: &FrequencyGrid<T>) -> Result<()> {
    let margin = T::lit(3.0) * shape.fwhm;
    for line in lines.iter().filter(|l| l.weight > T::zero()) {
        let (lo, hi) = (line.frequency - margin, line.frequency + margin);
        if lo < grid.start || hi > grid.end() {
            return Err(Error::GridTooNarrow {
                line: line.frequency.to_f64_lossy(),
                need_lo: lo.to_f64_lossy(),
                need_hi: hi.to_f64_lossy(),
                grid_lo: grid.start.to_f64_lossy(),
                grid_hi: grid.end().to_f64_lossy(),
            });
        }
    }
    Ok(())
}

pub fn synthesize_lines<T: Real>(
    lines: &[WeightedLine<T>],
    shape: &LineShape<T>,
    grid: &FrequencyGrid<T>,
) -> Result<Spectrum<T>> {
    check_coverage(lines, shape, grid)?;
    let mut y = vec![T::zero(); grid.count];
    for line in lines {
        if line.weight < T::zero() {
            return Err(Error::invalid("line weight", format!("{} must be ≥ 0", line.weight)));
        }
        if line.weight == T::zero() {
            continue;
        }
        for (i, v) in y.iter_mut().enumerate() {
            *v += line.weight * shape.eval(grid.value(i) - line.frequency);
        }
    }
    Spectrum::new(*grid, y)
}

/// Synthesis with the laser frequency at each scan point displaced by a
/// Gaussian error whose distribution has FWHM `jitter` MHz.
pub fn synthesize_jittered<T: Real, R: Rng + ?Sized>(
    lines: &[WeightedLine<T>],
    shape: &LineShape<T>,
    grid: &FrequencyGrid<T>,
    jitter: T,
    rng: &mut R,
) -> Result<Spectrum<T>> {
    check_coverage(lines, shape, grid)?;
    if !(jitter >= T::zero() && jitter.is_finite()) {
        return Err(Error::invalid("jitter", format!("{jitter} must be ≥ 0")));
    }
    let sigma = jitter / (T::lit(8.0) * T::lit(std::f64::consts::LN_2)).sqrt();
    let y = (0..grid.count)
        .map(|i| {
            let z: f64 = StandardNormal.sample(rng);
            let nu = grid.value(i) + sigma * T::lit(z);
            lines
                .iter()
                .fold(T::zero(), |s, l| s + l.weight * shape.eval(nu - l.frequency))
        })
        .collect();
    Spectrum::new(*grid, y)
}

/// One class of equivalent ligand positions whose isotope substitution
/// shifts the Eu line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SatelliteClass<T> {
    pub label: String,
    /// Number of equivalent positions.
    pub positions: u32,
    /// Abundance of the substituting isotope, 0–1.
    pub abundance: T,
    /// Line shift per substitution, MHz.
    pub shift: T,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SatelliteModel<T> {
    pub classes: Vec<SatelliteClass<T>>,
}

impl<T: Real> SatelliteModel<T> {
    pub fn new(classes: Vec<SatelliteClass<T>>) -> Result<Self> {
        for c in &classes {
            if c.positions == 0 {
                return Err(Error::invalid(
                    format!("satellites.{}.positions", c.label),
                    "must be ≥ 1",
                ));
            }
            if !(c.abundance >= T::zero() && c.abundance <= T::one()) {
                return Err(Error::invalid(
                    format!("satellites.{}.abundance", c.label),
                    format!("{} outside [0, 1]", c.abundance),
                ));
            }
        }
        Ok(Self { classes })
    }
}

/// Binomial probability of `k` substitutions among `n` sites.
pub fn binomial_weight<T: Real>(n: u32, k: u32, a: T) -> T {
    let mut c = T::one();
    for i in 0..k {
        c = c * T::from_u32(n - i).unwrap() / T::from_u32(i + 1).unwrap();
    }
    c * a.powi(k as i32) * (T::one() - a).powi((n - k) as i32)
}

/// Splits every line into its satellite family. Zero-probability satellites
/// are dropped.
pub fn apply_satellites<T: Real>(lines: &[WeightedLine<T>], model: &SatelliteModel<T>) -> Vec<WeightedLine<T>> {
    let mut current = lines.to_vec();
    for class in &model.classes {
        let mut next = Vec::with_capacity(current.len() * (class.positions as usize + 1));
        for line in &current {
            for k in 0..=class.positions {
                let p = binomial_weight(class.positions, k, class.abundance);
                if p == T::zero() {
                    continue;
                }
                next.push(WeightedLine {
                    frequency: line.frequency + T::from_u32(k).unwrap() * class.shift,
                    weight: line.weight * p,
                });
            }
        }
        current = next;
    }
    current
}

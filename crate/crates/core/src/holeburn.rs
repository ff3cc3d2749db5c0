//! Optical pumping over the inhomogeneous profile with a four-level rate
//! model (g1, g2, g3, e).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levels::TransitionTable;
use crate::linalg::Matrix;
use crate::num::Real;
use crate::spectrum::{LineShape, LineShapeKind};

/// Integrated absorption cross-section per unit oscillator strength, cm²·Hz.
pub const CROSS_SECTION_PER_F: f64 = 2.654e-2;
pub const AVOGADRO: f64 = 6.022_140_76e23;

const G1: usize = 0;
const G2: usize = 1;
const G3: usize = 2;
const E: usize = 3;

fn sum_tol<T: Real>() -> T {
    T::lit(1e-9).max(T::lit(64.0) * T::epsilon())
}

/// Closed frequency interval in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Band<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::invalid(
                "pump.bands",
                format!("[{lo}, {hi}] is empty or degenerate"),
            ));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, f: T) -> bool {
        f >= self.lo && f <= self.hi
    }

    fn distance(&self, f: T) -> T {
        if self.contains(f) {
            T::zero()
        } else if f < self.lo {
            self.lo - f
        } else {
            f - self.hi
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PumpScenario<T> {
    pub bands: Vec<Band<T>>,
    /// Optical pump rate inside a band, s⁻¹.
    pub pump_rate: T,
    /// rf rate on g1 ↔ g2, s⁻¹.
    pub rf_rate: T,
    /// Excited-state lifetime, s.
    pub t1: T,
    /// Branching ratios e → g1, g2, g3.
    pub beta: [T; 3],
    /// Rate between each pair of ground levels, s⁻¹.
    pub hyperfine_relaxation: T,
    /// Homogeneous FWHM (MHz) of the soft band edge; `None` is a top hat.
    pub soft_edge: Option<T>,
}

impl<T: Real> PumpScenario<T> {
    pub fn new(bands: Vec<Band<T>>, pump_rate: T, rf_rate: T, t1: T, beta: [T; 3]) -> Result<Self> {
        let s = Self {
            bands,
            pump_rate,
            rf_rate,
            t1,
            beta,
            hyperfine_relaxation: T::zero(),
            soft_edge: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bands.is_empty() {
            return Err(Error::invalid("pump.bands", "at least one band is required"));
        }
        for b in &self.bands {
            Band::new(b.lo, b.hi)?;
        }
        for (name, v) in [
            ("pump.pump_rate", self.pump_rate),
            ("pump.rf_rate", self.rf_rate),
            ("pump.hyperfine_relaxation", self.hyperfine_relaxation),
        ] {
            if !(v >= T::zero() && v.is_finite()) {
                return Err(Error::invalid(name, format!("{v} must be ≥ 0")));
            }
        }
        if !(self.t1 > T::zero() && self.t1.is_finite()) {
            return Err(Error::invalid("pump.t1", format!("{} must be > 0", self.t1)));
        }
        if self.beta.iter().any(|b| !(*b >= T::zero())) {
            return Err(Error::invalid("pump.beta", "branching ratios must be ≥ 0"));
        }
        let total = self.beta.iter().fold(T::zero(), |s, &b| s + b);
        if (total - T::one()).abs() > T::lit(1e-12).max(T::lit(8.0) * T::epsilon()) {
            return Err(Error::invalid("pump.beta", format!("sum is {total}, expected 1")));
        }
        if let Some(w) = self.soft_edge {
            if !(w > T::zero()) {
                return Err(Error::invalid("pump.soft_edge_mhz", format!("{w} must be > 0")));
            }
        }
        Ok(())
    }

    pub fn gamma(&self) -> T {
        T::one() / self.t1
    }

    /// Pump rate for a transition at frequency `f` MHz.
    pub fn rate_at(&self, f: T) -> T {
        match self.soft_edge {
            None => {
                if self.bands.iter().any(|b| b.contains(f)) {
                    self.pump_rate
                } else {
                    T::zero()
                }
            }
            Some(w) => {
                let d = self.bands.iter().map(|b| b.distance(f)).fold(T::infinity(), T::min);
                let x = T::lit(2.0) * d / w;
                self.pump_rate / (T::one() + x * x)
            }
        }
    }

    /// 4 × 4 generator acting on column population vectors (g1, g2, g3, e).
    pub fn generator(&self, rates: [T; 3]) -> Matrix<T> {
        let mut q = Matrix::zeros(4);
        let mut link = |from: usize, to: usize, r: T| {
            q[(to, from)] += r;
            q[(from, from)] -= r;
        };
        let gamma = self.gamma();
        for (i, &r) in rates.iter().enumerate() {
            link(i, E, r);
            link(E, i, self.beta[i] * gamma);
        }
        link(G1, G2, self.rf_rate);
        link(G2, G1, self.rf_rate);
        for (a, b) in [(G1, G2), (G1, G3), (G2, G3)] {
            link(a, b, self.hyperfine_relaxation);
            link(b, a, self.hyperfine_relaxation);
        }
        q
    }
}

/// Populations (g1, g2, g3, e).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassState<T> {
    pub populations: [T; 4],
}

impl<T: Real> ClassState<T> {
    pub fn new(populations: [T; 4]) -> Result<Self> {
        if populations.iter().any(|p| !(*p >= T::zero()) || !p.is_finite()) {
            return Err(Error::invalid("populations", "must be finite and ≥ 0"));
        }
        let total = populations.iter().fold(T::zero(), |s, &p| s + p);
        if (total - T::one()).abs() > sum_tol() {
            return Err(Error::invalid("populations", format!("sum is {total}, expected 1")));
        }
        Ok(Self { populations })
    }

    /// Equal ground populations, empty excited state.
    pub fn thermal() -> Self {
        let third = T::one() / T::lit(3.0);
        Self {
            populations: [third, third, third, T::zero()],
        }
    }

    pub fn g3(&self) -> T {
        self.populations[G3]
    }

    pub fn total(&self) -> T {
        self.populations.iter().fold(T::zero(), |s, &p| s + p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evolved<T> {
    pub state: ClassState<T>,
    /// Set when rounding produced negative populations beyond 1e-12 that
    /// were clipped to zero.
    pub clipped: bool,
}

/// Exact propagation `n(t) = exp(Q t) n(0)`.
pub fn evolve<T: Real>(state: &ClassState<T>, rates: [T; 3], s: &PumpScenario<T>, t: T) -> Result<Evolved<T>> {
    if !(t >= T::zero() && t.is_finite()) {
        return Err(Error::invalid("t", format!("{t} must be ≥ 0")));
    }
    if rates.iter().any(|r| !(*r >= T::zero())) {
        return Err(Error::invalid("rates", "must be ≥ 0"));
    }
    let p = s
        .generator(rates)
        .scaled(t)
        .expm_generator()
        .mul_vec(&state.populations);
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "propagation to t = {t} s produced non-finite populations"
        )));
    }
    let floor = T::lit(-1e-12);
    let clipped = p.iter().any(|&v| v < floor);
    let populations = [0, 1, 2, 3].map(|i| p[i].max(T::zero()));
    Ok(Evolved {
        state: ClassState { populations },
        clipped,
    })
}

fn rank_tol<T: Real>() -> T {
    T::lit(1e-10).max(T::lit(64.0) * T::epsilon())
}

/// Unique stationary distribution of the rate matrix.
pub fn steady_state<T: Real>(rates: [T; 3], s: &PumpScenario<T>) -> Result<ClassState<T>> {
    let q = s.generator(rates);
    let n = q.dim();
    let rank = q.rank(rank_tol());
    if rank < n - 1 {
        return Err(Error::NonUniqueSteadyState { dimension: n - rank });
    }
    // Q n = 0 with the last balance equation replaced by Σ n = 1.
    let mut a = q.clone();
    for j in 0..n {
        a[(n - 1, j)] = T::one();
    }
    let mut b = vec![T::zero(); n];
    b[n - 1] = T::one();
    let x = a
        .solve(&b, rank_tol())
        .ok_or_else(|| Error::Numerical("singular normalized rate matrix".into()))?;
    Ok(ClassState {
        populations: [0, 1, 2, 3].map(|i| x[i].max(T::zero())),
    })
}

/// Long-time limit starting from `initial`. Agrees with [`steady_state`]
/// when the stationary state is unique; otherwise each closed set of levels
/// keeps the population that drains into it.
pub fn steady_state_from<T: Real>(
    initial: &ClassState<T>,
    rates: [T; 3],
    s: &PumpScenario<T>,
) -> Result<ClassState<T>> {
    match steady_state(rates, s) {
        Err(Error::NonUniqueSteadyState { .. }) => {}
        other => return other,
    }
    let q = s.generator(rates);
    let n = q.dim();
    // reach[i][j]: j reachable from i
    let mut reach = [[false; 4]; 4];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && q[(j, i)] > T::zero() {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let recurrent: Vec<bool> = (0..n).map(|i| (0..n).all(|j| !reach[i][j] || reach[j][i])).collect();

    let mut result = [T::zero(); 4];
    let mut assigned = [false; 4];
    for start in 0..n {
        if !recurrent[start] || assigned[start] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| reach[start][j] && reach[j][start]).collect();
        for &c in &class {
            assigned[c] = true;
        }
        let pi = class_stationary(&q, &class)?;
        let mass = absorption_mass(&q, &recurrent, &class, &initial.populations)?;
        for (&c, &p) in class.iter().zip(&pi) {
            result[c] += mass * p;
        }
    }
    Ok(ClassState { populations: result })
}

fn class_stationary<T: Real>(q: &Matrix<T>, class: &[usize]) -> Result<Vec<T>> {
    let m = class.len();
    if m == 1 {
        return Ok(vec![T::one()]);
    }
    let mut a = Matrix::zeros(m);
    for (r, &i) in class.iter().enumerate() {
        for (c, &j) in class.iter().enumerate() {
            a[(r, c)] = q[(i, j)];
        }
    }
    for c in 0..m {
        a[(m - 1, c)] = T::one();
    }
    let mut b = vec![T::zero(); m];
    b[m - 1] = T::one();
    a.solve(&b, rank_tol())
        .ok_or_else(|| Error::Numerical("singular closed-class balance".into()))
}

/// Total initial population ending in `class`: recurrent members keep their
/// own population, transient levels contribute their absorption probability.
fn absorption_mass<T: Real>(q: &Matrix<T>, recurrent: &[bool], class: &[usize], p0: &[T; 4]) -> Result<T> {
    let n = q.dim();
    let transient: Vec<usize> = (0..n).filter(|&i| !recurrent[i]).collect();
    let mut mass = class.iter().fold(T::zero(), |s, &c| s + p0[c]);
    if transient.is_empty() {
        return Ok(mass);
    }
    // h_i = Σ_j (q_ji / out_i) h_j over transient j, plus direct jumps into the class.
    let m = transient.len();
    let mut a = Matrix::identity(m);
    let mut b = vec![T::zero(); m];
    for (r, &i) in transient.iter().enumerate() {
        let out = -q[(i, i)];
        for j in 0..n {
            if j == i {
                continue;
            }
            let p = q[(j, i)] / out;
            if let Some(c) = transient.iter().position(|&t| t == j) {
                a[(r, c)] -= p;
            } else if class.contains(&j) {
                b[r] += p;
            }
        }
    }
    let h = a
        .solve(&b, rank_tol())
        .ok_or_else(|| Error::Numerical("singular absorption system".into()))?;
    for (r, &i) in transient.iter().enumerate() {
        mass += p0[i] * h[r];
    }
    Ok(mass)
}

/// Discretized inhomogeneous distribution of class detunings.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassEnsemble<T> {
    pub profile: LineShape<T>,
    detunings: Vec<T>,
    weights: Vec<T>,
    pub table: TransitionTable<T>,
}

impl<T: Real> ClassEnsemble<T> {
    /// `classes` detunings evenly spaced over `[−half_span, half_span]`.
    /// Each class carries the profile probability of its bin; the outer bins
    /// absorb the tails so the weights sum to one.
    pub fn new(profile: LineShape<T>, classes: usize, half_span: T, table: TransitionTable<T>) -> Result<Self> {
        if classes < 2 {
            return Err(Error::invalid("ensemble.classes", "need at least two classes"));
        }
        if !(half_span > T::zero()) {
            return Err(Error::invalid(
                "ensemble.half_span_mhz",
                format!("{half_span} must be > 0"),
            ));
        }
        let step = T::lit(2.0) * half_span / T::from_usize_lossy(classes - 1);
        let detunings: Vec<T> = (0..classes)
            .map(|k| {
                // mirror so the grid is exactly symmetric
                let v = -half_span + step * T::from_usize_lossy(k);
                let w = half_span - step * T::from_usize_lossy(classes - 1 - k);
                (v + w) * T::lit(0.5)
            })
            .collect();
        let edge = |k: usize| -> T {
            if k == 0 {
                T::zero()
            } else if k == classes {
                T::one()
            } else {
                profile.cdf((detunings[k - 1] + detunings[k]) * T::lit(0.5))
            }
        };
        let weights = (0..classes).map(|k| edge(k + 1) - edge(k)).collect();
        Ok(Self {
            profile,
            detunings,
            weights,
            table,
        })
    }

    pub fn detunings(&self) -> &[T] {
        &self.detunings
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn with_fwhm(&self, fwhm: T) -> Result<Self> {
        let half = *self.detunings.last().expect("non-empty");
        Self::new(
            self.profile.with_fwhm(fwhm)?,
            self.detunings.len(),
            half,
            self.table.clone(),
        )
    }
}

/// Pump rates on g1→e3, g2→e3, g3→e3 for the class at detuning `delta`.
pub fn class_rates<T: Real>(e: &ClassEnsemble<T>, s: &PumpScenario<T>, delta: T) -> [T; 3] {
    [0, 1, 2].map(|i| s.rate_at(e.table.frequency(i, 2) + delta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preparation<T> {
    pub global_fraction: T,
    pub center_fraction: T,
    /// (detuning MHz, n_g3)
    pub curve: Vec<(T, T)>,
}

impl<T: Real> Preparation<T> {
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("delta_mhz,n_g3\n");
        for (d, n) in &self.curve {
            out.push_str(&format!("{},{}\n", d.to_f64_lossy(), n.to_f64_lossy()));
        }
        out
    }
}

/// Steady-state g3 fraction of every class, starting from thermal
/// populations. Classes whose stationary state is not unique (e.g. nothing
/// pumped) keep what their closed sets of levels collect.
pub fn prepare_population<T: Real>(e: &ClassEnsemble<T>, s: &PumpScenario<T>) -> Result<Preparation<T>> {
    s.validate()?;
    let start = ClassState::thermal();
    let per_class: Vec<T> = e
        .detunings
        .par_iter()
        .map(|&d| steady_state_from(&start, class_rates(e, s, d), s).map(|st| st.g3()))
        .collect::<Result<_>>()?;
    let global_fraction = per_class
        .iter()
        .zip(&e.weights)
        .fold(T::zero(), |acc, (&n, &w)| acc + n * w);
    let center_fraction = steady_state_from(&start, class_rates(e, s, T::zero()), s)?.g3();
    Ok(Preparation {
        global_fraction,
        center_fraction,
        curve: e.detunings.iter().copied().zip(per_class).collect(),
    })
}

/// Ion number density (cm⁻³) from mass density (g/cm³) and molar mass.
pub fn number_density<T: Real>(density: T, molar_mass: T) -> Result<T> {
    if !(density > T::zero() && molar_mass > T::zero()) {
        return Err(Error::invalid("density", "density and molar mass must be > 0"));
    }
    Ok(density / molar_mass * T::lit(AVOGADRO))
}

/// Peak cross-section in cm² for a line of the given shape and FWHM (MHz).
pub fn peak_cross_section<T: Real>(oscillator_strength: T, fwhm: T, kind: LineShapeKind<T>) -> Result<T> {
    let shape = LineShape::new(kind, fwhm * T::lit(1e6))?;
    Ok(T::lit(CROSS_SECTION_PER_F) * oscillator_strength * shape.peak())
}

/// Peak absorption coefficient α (cm⁻¹) of the prepared feature.
pub fn optical_depth<T: Real>(
    prepared_fraction: T,
    oscillator_strength: T,
    density: T,
    fwhm: T,
    kind: LineShapeKind<T>,
) -> Result<T> {
    for (name, v) in [
        ("prepared_fraction", prepared_fraction),
        ("oscillator_strength", oscillator_strength),
        ("density", density),
        ("fwhm_mhz", fwhm),
    ] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::invalid(name, format!("{v} must be > 0")));
        }
    }
    Ok(peak_cross_section(oscillator_strength, fwhm, kind)? * density * prepared_fraction)
}

//! Multi-peak least-squares fitting (Levenberg–Marquardt with an analytic
//! Jacobian).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::num::Real;

use super::peaks::{local_maxima, prominence};
use super::{LineShape, LineShapeKind, Spectrum};

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions<T> {
    /// Iteration cap for each local fit.
    pub max_iterations: usize,
    /// Relative cost decrease below which a fit is considered converged.
    pub tolerance: T,
    /// Seeds need at least this prominence relative to the global maximum.
    pub min_prominence: T,
    /// Initial-width multipliers tried from every seed set.
    pub width_multipliers: Vec<T>,
    /// A peak is added at the largest residual while it exceeds this
    /// fraction of the global maximum and fewer than `max_peaks` are fitted.
    pub residual_threshold: T,
    /// Every fitted component is this fixed pattern of (offset, fraction)
    /// copies; fractions sum to one so the fitted amplitude is the total
    /// area. Default is a single copy at zero offset.
    pub pattern: Vec<(T, T)>,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: T::lit(1e-10).max(T::lit(8.0) * T::epsilon()),
            min_prominence: T::lit(0.02),
            width_multipliers: vec![T::one(), T::lit(0.6), T::lit(1.6)],
            residual_threshold: T::lit(0.03),
            pattern: vec![(T::zero(), T::one())],
        }
    }
}

/// One fitted component. `amplitude` is the integrated area; the `*_err`
/// fields are one-sigma estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FittedPeak<T> {
    pub center: T,
    pub fwhm: T,
    pub amplitude: T,
    pub center_err: T,
    pub fwhm_err: T,
    pub amplitude_err: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport<T> {
    pub shape: &'static str,
    /// Sorted by center.
    pub peaks: Vec<FittedPeak<T>>,
    pub residual_rms: T,
    pub iterations: usize,
}

/// Model: Σ_k a_k Σ_j f_j · shape(x − c_k − o_j; w_k); parameters stored
/// as (c, a, w) triples.
struct Problem<'a, T> {
    x: Vec<T>,
    y: &'a [T],
    kind: LineShapeKind<T>,
    pattern: &'a [(T, T)],
}

struct Local<T> {
    params: Vec<T>,
    cost: T,
    iterations: usize,
    converged: bool,
}

impl<T: Real> Problem<'_, T> {
    fn shape(&self, w: T) -> LineShape<T> {
        LineShape {
            kind: self.kind,
            fwhm: w,
        }
    }

    /// Projects onto the feasible set: areas non-negative, centers inside
    /// the scan, widths between a tenth of the grid step and the scan span.
    fn project(&self, p: &mut [T]) {
        let lo = self.x[0];
        let hi = self.x[self.x.len() - 1];
        let span = hi - lo;
        let min_width = (self.x[1] - self.x[0]) * T::lit(0.1);
        for q in p.chunks_mut(3) {
            q[0] = q[0].max(lo).min(hi);
            q[1] = q[1].max(T::zero());
            q[2] = q[2].max(min_width).min(span);
        }
    }

    fn valid(p: &[T]) -> bool {
        p.iter().all(|v| v.is_finite()) && p.chunks(3).all(|q| q[2] > T::zero())
    }

    fn residuals(&self, p: &[T]) -> Vec<T> {
        let shapes: Vec<_> = p.chunks(3).map(|q| (q[0], q[1], self.shape(q[2]))).collect();
        self.x
            .iter()
            .zip(self.y)
            .map(|(&x, &y)| {
                y - shapes.iter().fold(T::zero(), |s, (c, a, sh)| {
                    s + *a
                        * self
                            .pattern
                            .iter()
                            .fold(T::zero(), |t, &(o, f)| t + f * sh.eval(x - *c - o))
                })
            })
            .collect()
    }

    fn cost(r: &[T]) -> T {
        r.iter().fold(T::zero(), |s, &v| s + v * v)
    }

    /// Jacobian of the model (not the residual), row-major m × n.
    fn jacobian(&self, p: &[T]) -> Vec<T> {
        let n = p.len();
        let mut jac = vec![T::zero(); self.x.len() * n];
        for (k, q) in p.chunks(3).enumerate() {
            let sh = self.shape(q[2]);
            for (i, &x) in self.x.iter().enumerate() {
                let (s, ds_du, ds_dw) = self
                    .pattern
                    .iter()
                    .fold((T::zero(), T::zero(), T::zero()), |acc, &(o, f)| {
                        let (s, du, dw) = sh.eval_with_derivatives(x - q[0] - o);
                        (acc.0 + f * s, acc.1 + f * du, acc.2 + f * dw)
                    });
                let row = &mut jac[i * n + 3 * k..i * n + 3 * k + 3];
                row[0] = -q[1] * ds_du;
                row[1] = s;
                row[2] = q[1] * ds_dw;
            }
        }
        jac
    }

    fn normal_equations(&self, p: &[T], r: &[T]) -> (Matrix<T>, Vec<T>) {
        let n = p.len();
        let jac = self.jacobian(p);
        let mut jtj = Matrix::zeros(n);
        let mut jtr = vec![T::zero(); n];
        for (i, &ri) in r.iter().enumerate() {
            let row = &jac[i * n..(i + 1) * n];
            for a in 0..n {
                if row[a] == T::zero() {
                    continue;
                }
                jtr[a] += row[a] * ri;
                for b in a..n {
                    jtj[(a, b)] += row[a] * row[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                jtj[(a, b)] = jtj[(b, a)];
            }
        }
        (jtj, jtr)
    }

    fn levenberg_marquardt(&self, start: Vec<T>, opts: &FitOptions<T>) -> Local<T> {
        let n = start.len();
        let mut p = start;
        self.project(&mut p);
        let mut r = self.residuals(&p);
        let mut cost = Self::cost(&r);
        let floor = Self::cost(self.y) * T::epsilon() * T::epsilon();
        let mut lambda = T::lit(1e-3);
        let lambda_max = T::lit(1e12);
        let mut iterations = 0;
        let mut converged = false;
        let (mut jtj, mut jtr) = self.normal_equations(&p, &r);
        while iterations < opts.max_iterations {
            iterations += 1;
            if cost <= floor {
                converged = true;
                break;
            }
            let mut damped = jtj.clone();
            for a in 0..n {
                let d = jtj[(a, a)].max(T::min_positive_value());
                damped[(a, a)] += lambda * d;
            }
            let step = damped.solve(&jtr, T::epsilon());
            let trial: Option<Vec<T>> = step.map(|d| {
                let mut t: Vec<T> = p.iter().zip(&d).map(|(&a, &b)| a + b).collect();
                self.project(&mut t);
                t
            });
            let accepted = match trial {
                Some(t) if Self::valid(&t) => {
                    let rt = self.residuals(&t);
                    let ct = Self::cost(&rt);
                    if ct < cost {
                        let small = cost - ct <= opts.tolerance * cost;
                        p = t;
                        r = rt;
                        cost = ct;
                        if small {
                            converged = true;
                            break;
                        }
                        true
                    } else {
                        false
                    }
                }
                _ => false,
            };
            if accepted {
                lambda = (lambda / T::lit(3.0)).max(T::lit(1e-12));
                (jtj, jtr) = self.normal_equations(&p, &r);
            } else {
                lambda *= T::lit(4.0);
                if lambda > lambda_max {
                    // no descent direction left: a (local) minimum
                    converged = true;
                    break;
                }
            }
        }
        Local {
            params: p,
            cost,
            iterations,
            converged,
        }
    }

    fn uncertainties(&self, p: &[T], cost: T) -> Vec<T> {
        let n = p.len();
        let m = self.x.len();
        if m <= n {
            return vec![T::infinity(); n];
        }
        let r = self.residuals(p);
        let (jtj, _) = self.normal_equations(p, &r);
        let s2 = cost / T::from_usize_lossy(m - n);
        (0..n)
            .map(|a| {
                let mut e = vec![T::zero(); n];
                e[a] = T::one();
                match jtj.solve(&e, T::epsilon()) {
                    Some(col) if col[a] >= T::zero() => (s2 * col[a]).sqrt(),
                    _ => T::infinity(),
                }
            })
            .collect()
    }
}

/// Starting points as (grid index, width estimate). Local maxima come
/// first, ranked by prominence; shoulders (maxima of the negative second
/// difference away from any maximum) fill the remaining slots.
fn seed_points<T: Real>(
    s: &Spectrum<T>,
    min_prominence: T,
    max_peaks: usize,
    min_width: T,
    span: T,
) -> Vec<(usize, T)> {
    let y = s.intensity();
    let (imax, top) = s.max();
    let step = s.grid.step;
    let n = y.len();
    let curvature: Vec<T> = (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                T::zero()
            } else {
                -(y[i - 1] - T::lit(2.0) * y[i] + y[i + 1])
            }
        })
        .collect();
    // Lorentzian relation −y''/y = 8/w² at line center
    let curvature_width = |i: usize| -> Option<T> {
        (curvature[i] > T::zero()).then(|| step * (T::lit(8.0) * y[i] / curvature[i]).sqrt())
    };

    let mut maxima: Vec<(usize, T)> = local_maxima(y)
        .into_iter()
        .map(|i| (i, prominence(y, i)))
        .filter(|&(_, p)| p >= min_prominence * top)
        .collect();
    if maxima.is_empty() {
        maxima.push((imax, top));
    }
    maxima.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    let mut seeds: Vec<(usize, T)> = maxima
        .iter()
        .map(|&(i, _)| {
            // half-height width overestimates blended lines
            let half = s.width_at_half(i).unwrap_or(span / T::lit(10.0));
            (i, curvature_width(i).map_or(half, |w| w.min(half)).max(min_width))
        })
        .collect();

    let cmax = curvature.iter().copied().fold(T::zero(), T::max);
    let mut shoulders: Vec<usize> = local_maxima(&curvature)
        .into_iter()
        .filter(|&i| curvature[i] >= min_prominence * cmax && y[i] >= min_prominence * top)
        .collect();
    shoulders.sort_by(|&a, &b| {
        curvature[b]
            .partial_cmp(&curvature[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    // shoulders ride on other lines' tails, so their own width is taken
    // from the narrowest resolved maximum rather than from y/y''
    let narrowest = seeds.iter().map(|&(_, w)| w).fold(T::infinity(), T::min);
    let guard = (narrowest / step / T::lit(2.0)).to_usize().unwrap_or(1).max(2);
    for i in shoulders {
        if seeds.len() >= max_peaks {
            break;
        }
        let w = curvature_width(i)
            .map_or(narrowest, |w| w.min(narrowest))
            .max(min_width);
        if seeds.iter().all(|&(j, _)| i.abs_diff(j) > guard) {
            seeds.push((i, w));
        }
    }
    seeds.truncate(max_peaks);
    seeds
}

/// Fits up to `max_peaks` components of the given shape with default
/// options.
pub fn fit_peaks<T: Real>(s: &Spectrum<T>, kind: LineShapeKind<T>, max_peaks: usize) -> Result<FitReport<T>> {
    fit_peaks_with(s, kind, max_peaks, &FitOptions::default())
}

pub fn fit_peaks_with<T: Real>(
    s: &Spectrum<T>,
    kind: LineShapeKind<T>,
    max_peaks: usize,
    opts: &FitOptions<T>,
) -> Result<FitReport<T>> {
    if max_peaks == 0 {
        return Err(Error::invalid("max_peaks", "must be ≥ 1"));
    }
    LineShape::new(kind, T::one())?;
    let total: T = opts.pattern.iter().fold(T::zero(), |s, &(_, f)| s + f);
    if opts.pattern.is_empty()
        || opts.pattern.iter().any(|&(o, f)| !o.is_finite() || !(f >= T::zero()))
        || (total - T::one()).abs() > T::lit(1e-6)
    {
        return Err(Error::invalid("pattern", "fractions must be ≥ 0 and sum to 1"));
    }
    if opts.width_multipliers.is_empty() {
        return Err(Error::invalid("width_multipliers", "need at least one"));
    }
    let y = s.intensity();
    let (_, top) = s.max();
    if !(top > T::zero()) {
        return Err(Error::NoPeaks);
    }
    let problem = Problem {
        x: s.frequencies(),
        y,
        kind,
        pattern: &opts.pattern,
    };

    let min_width = s.grid.step * T::lit(2.0);
    let span = s.grid.end() - s.grid.start;
    let seeds = seed_points(s, opts.min_prominence, max_peaks, min_width, span);
    // seeds sit on the strongest copy of the pattern
    let (main_offset, main_fraction) =
        opts.pattern.iter().copied().fold(
            (T::zero(), T::zero()),
            |best, (o, f)| if f > best.1 { (o, f) } else { best },
        );
    let seed_params = |(i, w0): (usize, T), mult: T| -> [T; 3] {
        let w = w0 * mult;
        let peak = LineShape { kind, fwhm: w }.peak();
        [s.grid.value(i) - main_offset, y[i] / (peak * main_fraction), w]
    };

    let mut best: Option<Local<T>> = None;
    let mut total_iterations = 0;
    for &mult in &opts.width_multipliers {
        let start: Vec<T> = seeds.iter().flat_map(|&seed| seed_params(seed, mult)).collect();
        let local = problem.levenberg_marquardt(start, opts);
        total_iterations += local.iterations;
        if best.as_ref().is_none_or(|b| local.cost < b.cost) {
            best = Some(local);
        }
    }
    let mut best = best.expect("at least one start");

    // Grow the model where the residual shows unexplained structure.
    while best.params.len() / 3 < max_peaks {
        let r = problem.residuals(&best.params);
        let (i, ri) = r.iter().enumerate().fold(
            (0, T::neg_infinity()),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
        if ri < opts.residual_threshold * top {
            break;
        }
        let mut start = best.params.clone();
        let w = best
            .params
            .chunks(3)
            .map(|q| q[2])
            .fold(T::infinity(), T::min)
            .max(min_width);
        let peak = LineShape { kind, fwhm: w }.peak();
        start.extend([s.grid.value(i), ri / peak, w]);
        let local = problem.levenberg_marquardt(start, opts);
        total_iterations += local.iterations;
        if local.cost < best.cost * T::lit(0.5) {
            best = local;
        } else {
            break;
        }
    }

    let m = T::from_usize_lossy(y.len());
    let residual_rms = (best.cost / m).sqrt();
    if !best.converged {
        return Err(Error::FitDidNotConverge {
            iterations: total_iterations,
            residual_rms: residual_rms.to_f64_lossy(),
            best: best
                .params
                .chunks(3)
                .map(|q| (q[0].to_f64_lossy(), q[2].to_f64_lossy(), q[1].to_f64_lossy()))
                .collect(),
        });
    }
    // components pushed to zero area carry no information
    let kept: Vec<T> = best
        .params
        .chunks(3)
        .filter(|q| q[1] > T::zero())
        .flatten()
        .copied()
        .collect();
    if !kept.is_empty() {
        best.params = kept;
    }
    let errs = problem.uncertainties(&best.params, best.cost);
    let mut peaks: Vec<FittedPeak<T>> = best
        .params
        .chunks(3)
        .zip(errs.chunks(3))
        .map(|(q, e)| FittedPeak {
            center: q[0],
            amplitude: q[1],
            fwhm: q[2],
            center_err: e[0],
            amplitude_err: e[1],
            fwhm_err: e[2],
        })
        .collect();
    peaks.sort_by(|a, b| a.center.partial_cmp(&b.center).unwrap_or(std::cmp::Ordering::Equal));
    Ok(FitReport {
        shape: kind.name(),
        peaks,
        residual_rms,
        iterations: total_iterations,
    })
}

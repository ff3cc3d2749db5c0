use crate::num::Real;

use super::Spectrum;

/// Indices of strict local maxima. A flat top counts once, at its first
/// point. End points never count.
pub fn local_maxima<T: Real>(y: &[T]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < y.len() {
        if y[i] > y[i - 1] {
            let mut j = i;
            while j + 1 < y.len() && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < y.len() && y[j + 1] < y[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Topographic prominence of the maximum at `i`: height above the higher of
/// the two lowest points separating it from taller terrain (or the grid
/// edge).
pub fn prominence<T: Real>(y: &[T], i: usize) -> T {
    let h = y[i];
    let mut left_min = h;
    for k in (0..i).rev() {
        if y[k] > h {
            break;
        }
        left_min = left_min.min(y[k]);
    }
    let mut right_min = h;
    for &v in &y[i + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Number of distinguishable peaks. Local maxima below `threshold × max`
/// are ignored; neighbouring candidates are merged when the dip between them
/// is shallower than `threshold × max` relative to the lower of the two.
pub fn resolved_count<T: Real>(spectrum: &Spectrum<T>, threshold: T) -> usize {
    let y = spectrum.intensity();
    let (_, top) = spectrum.max();
    if !(top > T::zero()) {
        return 0;
    }
    let level = threshold * top;
    let candidates: Vec<usize> = local_maxima(y).into_iter().filter(|&i| y[i] >= level).collect();
    if candidates.is_empty() {
        // monotone spectrum with its maximum on the edge
        return 1;
    }
    let mut groups = 1;
    // tallest point of the current merged group
    let mut group_peak = y[candidates[0]];
    for pair in candidates.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let valley = y[a..=b].iter().copied().fold(T::infinity(), T::min);
        let lower = group_peak.min(y[b]);
        if lower - valley >= level {
            groups += 1;
            group_peak = y[b];
        } else {
            group_peak = group_peak.max(y[b]);
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{synthesize_lines, FrequencyGrid, LineShape, WeightedLine};

    fn doublet(sep: f64, fwhm: f64) -> Spectrum<f64> {
        let lines = [
            WeightedLine {
                frequency: -sep / 2.0,
                weight: 1.0,
            },
            WeightedLine {
                frequency: sep / 2.0,
                weight: 1.0,
            },
        ];
        let grid = FrequencyGrid::spanning(-sep - 4.0 * fwhm, sep + 4.0 * fwhm, 0.25).unwrap();
        synthesize_lines(&lines, &LineShape::lorentzian(fwhm).unwrap(), &grid).unwrap()
    }

    #[test]
    fn maxima_and_plateaus() {
        assert_eq!(local_maxima(&[0.0, 1.0, 0.0, 2.0, 2.0, 1.0, 3.0]), vec![1, 3]);
        assert!(local_maxima(&[1.0, 2.0, 3.0]).is_empty());
    }

    #[test]
    fn prominence_of_shoulder() {
        let y = [0.0, 5.0, 2.0, 3.0, 0.0];
        assert_eq!(prominence(&y, 1), 5.0);
        assert_eq!(prominence(&y, 3), 1.0);
    }

    #[test]
    fn doublet_resolution() {
        assert_eq!(resolved_count(&doublet(100.0, 25.0), 0.3), 2);
        assert_eq!(resolved_count(&doublet(10.0, 25.0), 0.3), 1);
    }

    #[test]
    fn empty_spectrum() {
        let s = Spectrum::zeros(FrequencyGrid::new(0.0, 1.0, 10).unwrap());
        assert_eq!(resolved_count(&s, 0.3), 0);
    }
}

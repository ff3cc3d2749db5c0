#![allow(dead_code)]

use std::path::PathBuf;

use eucl::interactions::{Drive, KmcConfig, Lattice};
use eucl::spectrum::{FrequencyGrid, LineShape};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn scenario(name: &str) -> PathBuf {
    repo_root().join("scenarios").join(name)
}

/// Shift of site i in configuration `mask` (bit j set = j excited).
fn shift(lattice: &Lattice, mask: usize, i: usize) -> f64 {
    (0..lattice.len())
        .filter(|&j| j != i && mask >> j & 1 == 1)
        .map(|j| lattice.pair_shift(i, j))
        .sum()
}

/// Exit transitions (target, rate) out of `mask`.
fn transitions(lattice: &Lattice, config: &KmcConfig, drive: &Drive, mask: usize) -> Vec<(usize, f64)> {
    let gamma = 1.0 / config.t1;
    (0..lattice.len())
        .map(|i| {
            let target = mask ^ (1 << i);
            if mask >> i & 1 == 1 {
                (target, gamma)
            } else {
                let x = 2.0 * (lattice.detunings()[i] + shift(lattice, mask, i) - drive.frequency)
                    / config.homogeneous_fwhm;
                (target, drive.rate / (1.0 + x * x))
            }
        })
        .collect()
}

/// Distribution over all 2^N configurations after the drive, starting from
/// all-ground, by uniformization of the full master equation.
pub fn master_equation(lattice: &Lattice, config: &KmcConfig, drive: &Drive) -> Vec<f64> {
    let n = lattice.len();
    assert!(n <= 12, "exhaustive enumeration only for small clusters");
    let states = 1usize << n;
    let out: Vec<Vec<(usize, f64)>> = (0..states).map(|s| transitions(lattice, config, drive, s)).collect();
    let exit: Vec<f64> = out.iter().map(|t| t.iter().map(|x| x.1).sum()).collect();
    let lambda = exit.iter().cloned().fold(0.0, f64::max) * 1.05 + 1e-300;
    let mut p = vec![0.0; states];
    p[0] = 1.0;
    if drive.duration == 0.0 {
        return p;
    }
    let pieces = ((lambda * drive.duration) / 30.0).ceil().max(1.0) as usize;
    let mu = lambda * drive.duration / pieces as f64;
    for _ in 0..pieces {
        let mut term = p.clone();
        let mut weight = (-mu).exp();
        let mut acc: Vec<f64> = term.iter().map(|v| v * weight).collect();
        let mut cumulative = weight;
        let mut k = 0;
        while 1.0 - cumulative > 1e-15 && k < 10_000 {
            k += 1;
            let mut next = vec![0.0; states];
            for s in 0..states {
                if term[s] == 0.0 {
                    continue;
                }
                next[s] += term[s] * (1.0 - exit[s] / lambda);
                for &(t, r) in &out[s] {
                    next[t] += term[s] * r / lambda;
                }
            }
            term = next;
            weight *= mu / k as f64;
            cumulative += weight;
            for (a, v) in acc.iter_mut().zip(&term) {
                *a += weight * v;
            }
        }
        p = acc;
    }
    p
}

pub fn expected_excited_fraction(p: &[f64], n: usize) -> f64 {
    p.iter()
        .enumerate()
        .map(|(s, w)| w * s.count_ones() as f64 / n as f64)
        .sum()
}

/// Ensemble-averaged probe absorption of the ground ions, per site.
pub fn expected_probe(lattice: &Lattice, p: &[f64], probe: &LineShape<f64>, grid: &FrequencyGrid<f64>) -> Vec<f64> {
    let n = lattice.len();
    let mut y = vec![0.0; grid.count];
    for (mask, &w) in p.iter().enumerate() {
        if w < 1e-300 {
            continue;
        }
        for i in (0..n).filter(|&i| mask >> i & 1 == 0) {
            let center = lattice.detunings()[i] + shift(lattice, mask, i);
            for (k, v) in y.iter_mut().enumerate() {
                *v += w * probe.eval(grid.value(k) - center) / n as f64;
            }
        }
    }
    y
}

/// Straight chain of `n` sites along z, C2 axis along z.
pub fn chain(n: usize, spacing: f64) -> Vec<[f64; 3]> {
    (0..n).map(|i| [0.0, 0.0, i as f64 * spacing]).collect()
}

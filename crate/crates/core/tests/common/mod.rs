#![allow(dead_code)]

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;
use vvlab::littlewood_paley::cutoff;
use vvlab::spectral::{Grid, SpectralField};

/// Mean-free Gaussian field with modes `max(|m1|, |m2|) <= band`, grid sup one.
pub fn random_field(grid: &Grid, band: i64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for m2 in 0..=band {
        for m1 in -band..=band {
            if m2 == 0 && m1 <= 0 {
                continue;
            }
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            modes.push((m1, m2, Complex64::new(re, im)));
        }
    }
    let f = SpectralField::from_modes(grid, &modes);
    let sup = f.sup_norm();
    f.scale(1.0 / sup)
}

/// Direct `O(N^4)` transform with the `1/N^2` convention.
pub fn naive_dft(n: usize, samples: &[f64], m1: i64, m2: i64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for iy in 0..n {
        for ix in 0..n {
            let phase = -2.0 * PI * ((m1 * ix as i64 + m2 * iy as i64) as f64) / n as f64;
            acc += samples[iy * n + ix] * Complex64::cis(phase);
        }
    }
    acc / (n * n) as f64
}

/// Periodic kernel of `S_n` restricted to the modes of an `m x m` lattice:
/// `K(y) = L^-2 sum_k chi(2^-n |k|) e^{i k.y}`.
pub fn low_pass_kernel(m: usize, box_length: f64, n: i32, y: (f64, f64)) -> f64 {
    let kappa = 2.0 * PI / box_length;
    let half = (m / 2) as i64;
    let mut acc = 0.0;
    for a in -half..half {
        for b in -half..half {
            let (k1, k2) = (kappa * a as f64, kappa * b as f64);
            let weight = cutoff((-n as f64).exp2() * k1.hypot(k2));
            acc += weight * (k1 * y.0 + k2 * y.1).cos();
        }
    }
    acc / (box_length * box_length)
}

/// `r_n(v, w)(x) = int K_n(y) (v(x-y) - v(x)) (w(x-y) - w(x)) dy` by the
/// trapezoid rule on the `m x m` grid; exact for fields of degree below `m/4`.
pub fn r_n_by_quadrature(
    m: usize,
    box_length: f64,
    n: i32,
    v: impl Fn(f64, f64) -> f64,
    w: impl Fn(f64, f64) -> f64,
    x: (f64, f64),
) -> f64 {
    let h = box_length / m as f64;
    let mut acc = 0.0;
    for iy in 0..m {
        for ix in 0..m {
            let y = (ix as f64 * h, iy as f64 * h);
            let (px, py) = (x.0 - y.0, x.1 - y.1);
            let dv = v(px, py) - v(x.0, x.1);
            let dw = w(px, py) - w(x.0, x.1);
            acc += low_pass_kernel(m, box_length, n, y) * dv * dw;
        }
    }
    acc * h * h
}

pub fn max_abs_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    (a - b).sup_norm()
}

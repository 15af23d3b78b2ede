#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectra_asym::C64;

/// Lowest `count` eigenvalues of `-u'' + v(x) u` on the real line, from a
/// sinc (Colbert-Miller) discretization on `[-half_width, half_width]`.
pub fn dvr_levels(v: impl Fn(f64) -> f64, half_width: f64, h: f64, count: usize) -> Vec<f64> {
    let n = (2.0 * half_width / h).round() as usize + 1;
    let x = |i: usize| -half_width + h * i as f64;
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let mat = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            pi2 / (3.0 * h * h) + v(x(i))
        } else {
            let d = i as f64 - j as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * 2.0 / (d * d * h * h)
        }
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(mat).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev.truncate(count);
    ev
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_real(rng: &mut ChaCha8Rng, len: usize, bound: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-bound..bound)).collect()
}

/// Uniform in the unit disk.
pub fn random_disk(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    (0..len)
        .map(|_| {
            let r = rng.gen::<f64>().sqrt();
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            C64::from_polar(r, t)
        })
        .collect()
}

pub fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

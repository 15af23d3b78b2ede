//! Independent reference computations used by the verification suite.
//!
//! Nothing here shares code paths with the production formulas they check.

use num_complex::Complex;

use crate::coeffs::MultiIndex;
use crate::scalar::{lit, Real};

/// Exhaustive enumeration of alpha in {0..=j}^(m-1) with |alpha| = k and
/// alpha . beta = j.
pub fn brute_force_multi_indices(m: usize, j: usize, k: usize) -> Vec<MultiIndex> {
    let len = m.saturating_sub(1);
    let mut out = Vec::new();
    if len == 0 {
        return out;
    }
    let mut alpha = vec![0usize; len];
    loop {
        let weight: usize = alpha.iter().sum();
        let degree: usize = alpha.iter().enumerate().map(|(i, &n)| (i + 1) * n).sum();
        if weight == k && degree == j {
            out.push(MultiIndex { alpha: alpha.clone() });
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == len {
                return out;
            }
            if alpha[pos] < j {
                alpha[pos] += 1;
                break;
            }
            alpha[pos] = 0;
            pos += 1;
        }
    }
}

/// Coefficients s_0..=s_order of sqrt(1 + a_1 w + a_2 w^2 + ... + a_(m-1) w^(m-1))
/// as a power series in w = 1/z, from the recurrence 2 s_n = x_n - sum_{i=1}^{n-1} s_i s_(n-i).
pub fn series_b<T: Real>(a: &[Complex<T>], order: usize) -> Vec<Complex<T>> {
    let zero = Complex::from(T::zero());
    let x: Vec<Complex<T>> = (0..=order).map(|n| if n >= 1 && n <= a.len() { a[n - 1] } else { zero }).collect();
    let mut s = vec![zero; order + 1];
    s[0] = Complex::from(T::one());
    let half = lit::<T>(0.5);
    for n in 1..=order {
        let conv = (1..n).fold(zero, |acc, i| acc + s[i] * s[n - i]);
        s[n] = (x[n] - conv) * half;
    }
    s
}

/// e_2..e_6 (those with j < c.len()) as explicit polynomials in c_j = d_j/d_0,
/// obtained by reverting the quantization condition as a power series in
/// lambda_(n,0)^(-1/m).
pub fn e_closed_forms<T: Real>(m: usize, c: &[Complex<T>]) -> Vec<(usize, Complex<T>)> {
    let m = T::from_usize(m).expect("small integer");
    let two = lit::<T>(2.0);
    let mp2 = m + two;
    let zero = Complex::from(T::zero());
    let at = |j: usize| if j < c.len() { c[j] } else { zero };
    let (c2, c3, c4, c5, c6) = (at(2), at(3), at(4), at(5), at(6));
    let mut out = Vec::new();
    for j in 2..c.len().min(7) {
        let v = match j {
            2 => -c2 * (two * m / mp2),
            3 => -c3 * (two * m / mp2),
            4 => (c2 * c2 * (lit::<T>(3.0) * m - lit::<T>(6.0)) - c4 * (two * m + lit::<T>(4.0))) * (m / (mp2 * mp2)),
            5 => (c2 * c3 * (lit::<T>(3.0) * m - lit::<T>(8.0)) - c5 * (m + two)) * (two * m / (mp2 * mp2)),
            6 => {
                let m2 = m * m;
                let poly = c2 * c2 * c2 * (lit::<T>(12.0) * m2 - lit::<T>(64.0) * m + lit::<T>(80.0))
                    - c2 * c4 * (lit::<T>(18.0) * m2 - lit::<T>(24.0) * m - lit::<T>(120.0))
                    - c3 * c3 * (lit::<T>(9.0) * m2 - lit::<T>(12.0) * m - lit::<T>(60.0))
                    + c6 * (lit::<T>(6.0) * m2 + lit::<T>(24.0) * m + lit::<T>(24.0));
                -poly * (m / (lit::<T>(3.0) * mp2 * mp2 * mp2))
            }
            _ => unreachable!(),
        };
        out.push((j, v));
    }
    out
}

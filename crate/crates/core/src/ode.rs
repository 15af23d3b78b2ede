//! Adaptive Dormand–Prince 5(4) integration of complex first-order systems.
//!
//! The integrator works in either direction (`s1 < s0` is fine). For linear
//! systems the state can be rescaled on the fly: whenever its largest
//! component exceeds `renorm_threshold` it is divided by that magnitude and
//! the natural log of the factor is added to `log_scale`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Initial step magnitude; chosen automatically when `None`.
    pub h_init: Option<T>,
    /// Upper bound on the step magnitude.
    pub h_max: Option<T>,
    pub max_steps: usize,
    /// Rescale the state when its largest component exceeds this. Only
    /// meaningful for linear systems.
    pub renorm_threshold: Option<T>,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self {
            rtol: lit(1e-10),
            atol: lit(1e-12),
            h_init: None,
            h_max: None,
            max_steps: 5_000_000,
            renorm_threshold: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeSolution<T, const N: usize> {
    pub y: [Complex<T>; N],
    /// The true state is `y * exp(log_scale)`.
    pub log_scale: T,
    pub accepted: usize,
    pub rejected: usize,
}

fn axpy<T: Real, const N: usize>(y: &[Complex<T>; N], h: T, terms: &[(f64, &[Complex<T>; N])]) -> [Complex<T>; N] {
    let mut out = *y;
    for (w, k) in terms {
        let hw = h * lit::<T>(*w);
        for i in 0..N {
            out[i] += k[i] * hw;
        }
    }
    out
}

fn max_abs<T: Real, const N: usize>(y: &[Complex<T>; N]) -> T {
    y.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
}

/// Integrates `y' = f(s, y)` from `s0` to `s1`.
pub fn integrate<T, F, const N: usize>(
    mut f: F,
    s0: T,
    s1: T,
    y0: [Complex<T>; N],
    opts: &OdeOptions<T>,
) -> Result<OdeSolution<T, N>>
where
    T: Real,
    F: FnMut(T, &[Complex<T>; N]) -> [Complex<T>; N],
{
    let span = s1 - s0;
    let mut sol = OdeSolution { y: y0, log_scale: T::zero(), accepted: 0, rejected: 0 };
    if span == T::zero() {
        return Ok(sol);
    }
    let dir = span.signum();
    let h_max = opts.h_max.unwrap_or(span.abs()).min(span.abs());

    let mut s = s0;
    let mut y = y0;
    let mut k1 = f(s, &y);

    let mut h = match opts.h_init {
        Some(h) => h.abs(),
        None => {
            let d0 = max_abs(&y);
            let d1 = max_abs(&k1);
            if d0 > lit(1e-5) && d1 > lit(1e-5) {
                lit::<T>(0.01) * d0 / d1
            } else {
                lit(1e-6)
            }
        }
    }
    .min(h_max);

    let safety = lit::<T>(0.9);
    let fac_min = lit::<T>(0.2);
    let fac_max = lit::<T>(5.0);
    let fifth = lit::<T>(0.2);
    let tiny = T::epsilon() * lit(16.0);

    while (s1 - s) * dir > T::zero() {
        if sol.accepted + sol.rejected >= opts.max_steps {
            return Err(Error::TooManySteps { max_steps: opts.max_steps, s: s.to_f64().unwrap_or(f64::NAN) });
        }
        let remaining = (s1 - s).abs();
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = h * dir;

        let k2 = f(s + hs * lit(C2), &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = f(s + hs * lit(C3), &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(s + hs * lit(C4), &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(s + hs * lit(C5), &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let s_new = if last { s1 } else { s + hs };
        let k6 = f(s_new, &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(s_new, &y_new);

        let mut err2 = T::zero();
        for i in 0..N {
            let e = (k1[i] * lit::<T>(E1)
                + k3[i] * lit::<T>(E3)
                + k4[i] * lit::<T>(E4)
                + k5[i] * lit::<T>(E5)
                + k6[i] * lit::<T>(E6)
                + k7[i] * lit::<T>(E7))
                * hs;
            let sc = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err2 += (e.norm() / sc).powi(2);
        }
        let err = (err2 / T::from_usize(N).unwrap()).sqrt();

        if err.is_nan() {
            return Err(Error::StepUnderflow { s: s.to_f64().unwrap_or(f64::NAN) });
        }

        if err <= T::one() {
            s = s_new;
            y = y_new;
            k1 = k7;
            sol.accepted += 1;
            if let Some(th) = opts.renorm_threshold {
                let big = max_abs(&y);
                if big > th {
                    let inv = big.recip();
                    for v in y.iter_mut().chain(k1.iter_mut()) {
                        *v = *v * inv;
                    }
                    sol.log_scale += big.ln();
                }
            }
            let fac = if err == T::zero() { fac_max } else { (safety * err.powf(-fifth)).min(fac_max).max(fac_min) };
            h = (h * fac).min(h_max);
        } else {
            sol.rejected += 1;
            h = h * (safety * err.powf(-fifth)).max(fac_min);
        }
        if h <= tiny * s.abs().max(T::one()) {
            return Err(Error::StepUnderflow { s: s.to_f64().unwrap_or(f64::NAN) });
        }
    }
    sol.y = y;
    Ok(sol)
}

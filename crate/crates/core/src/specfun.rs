//! Gamma, beta and the small combinatorial helpers used by the coefficient
//! formulas.
//!
//! Gamma uses Pugh's 11-term Lanczos approximation (r = 10.900511), which is
//! accurate to roughly 1e-15 relative for `Re x >= 1/2`. Arguments with
//! `0 < Re x < 1/2` are shifted up by one with the recurrence, so the left
//! half-plane is never needed.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

const LANCZOS_R: f64 = 10.900511;

const LANCZOS_D: [f64; 11] = [
    2.48574089138753565546e-5,
    1.05142378581721974210,
    -3.45687097222016235469,
    4.51227709466894823700,
    -2.98285225323576655721,
    1.05639711577126713077,
    -1.95428773191645869583e-1,
    1.70970543404441224307e-2,
    -5.71926117404305781283e-4,
    4.63399473359905636708e-6,
    -2.71994908488607703910e-9,
];

/// ln(2 sqrt(e / pi))
const LN_TWO_SQRT_E_OVER_PI: f64 = 0.62078223763524522234551844578164721225185272790259946;

fn lanczos_ln_gamma<T: Real>(x: Complex<T>) -> Complex<T> {
    let half = lit::<T>(0.5);
    let mut s = Complex::from(lit::<T>(LANCZOS_D[0]));
    for (i, &d) in LANCZOS_D.iter().enumerate().skip(1) {
        s += Complex::from(lit::<T>(d)) / (x + from_usize::<T>(i - 1));
    }
    let shifted = x - half;
    s.ln() + lit::<T>(LN_TWO_SQRT_E_OVER_PI) + shifted * ((shifted + lit::<T>(LANCZOS_R)).ln() - T::one())
}

/// log Γ(x) for complex `x` with `Re x > 0`.
///
/// The imaginary part is the sum of principal logarithms, so it may differ
/// from the continuous branch by a multiple of 2π; `exp` of the result is
/// always Γ(x).
pub fn log_gamma<T: Real>(x: Complex<T>) -> Result<Complex<T>> {
    if !(x.re > T::zero()) {
        return Err(Error::Domain { func: "log_gamma", detail: format!("Re x = {} must be positive", x.re) });
    }
    if x.re < lit(0.5) {
        Ok(lanczos_ln_gamma(x + T::one()) - x.ln())
    } else {
        Ok(lanczos_ln_gamma(x))
    }
}

/// log Γ(x) for real `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> Result<T> {
    log_gamma(Complex::from(x)).map(|z| z.re)
}

/// Γ(x) for real `x > 0`.
pub fn gamma<T: Real>(x: T) -> Result<T> {
    ln_gamma(x).map(T::exp)
}

/// The beta function B(x, y) = Γ(x)Γ(y)/Γ(x+y) for `x, y > 0`.
pub fn beta<T: Real>(x: T, y: T) -> Result<T> {
    if !(x > T::zero() && y > T::zero()) {
        return Err(Error::Domain { func: "beta", detail: format!("arguments ({x}, {y}) must be positive") });
    }
    Ok((ln_gamma(x)? + ln_gamma(y)? - ln_gamma(x + y)?).exp())
}

/// Generalized binomial coefficient x(x-1)...(x-k+1)/k!.
pub fn gen_binomial<T: Real>(x: T, k: usize) -> T {
    (0..k).fold(T::one(), |acc, i| {
        let i = from_usize::<T>(i);
        acc * (x - i) / (i + T::one())
    })
}

/// Sum of the first `k - 1` odd reciprocals, 1/1 + 1/3 + ... + 1/(2k-3).
///
/// `k = 1` gives the empty sum.
pub fn odd_harmonic<T: Real>(k: usize) -> T {
    (1..k).fold(T::zero(), |acc, i| acc + T::one() / from_usize::<T>(2 * i - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn log_gamma_known_values() {
        assert!(log_gamma(c(1.0)).unwrap().norm() < 1e-15);
        assert!(log_gamma(c(2.0)).unwrap().norm() < 1e-15);
        let half = log_gamma(c(0.5)).unwrap();
        assert!((half.re - PI.sqrt().ln()).abs() < 1e-14 * PI.sqrt().ln());
        let four = log_gamma(c(4.0)).unwrap().re;
        assert!((four - 6f64.ln()).abs() < 1e-13 * 6f64.ln());
    }

    #[test]
    fn log_gamma_rejects_left_half_plane() {
        assert!(matches!(log_gamma(c(0.0)), Err(Error::Domain { .. })));
        assert!(matches!(log_gamma(Complex::new(-0.5, 1.0)), Err(Error::Domain { .. })));
        assert!(beta(0.0, 1.0).is_err());
        assert!(beta(1.0, -2.0).is_err());
    }

    #[test]
    fn complex_gamma_matches_reflection_on_imaginary_shift() {
        // |Γ(1/2 + iy)|^2 = π / cosh(πy)
        for &y in &[0.3, 1.0, 2.5, 7.0] {
            let lg = log_gamma(Complex::new(0.5, y)).unwrap();
            let expected = (PI / (PI * y).cosh()).ln();
            assert!((2.0 * lg.re - expected).abs() < 1e-13 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn complex_recurrence() {
        for &(re, im) in &[(0.2, 0.7), (1.3, -2.0), (3.5, 4.0), (0.05, 0.0)] {
            let z = Complex::new(re, im);
            let lhs = log_gamma(z + 1.0).unwrap().exp();
            let rhs = log_gamma(z).unwrap().exp() * z;
            assert!((lhs - rhs).norm() <= 1e-13 * rhs.norm());
        }
    }

    #[test]
    fn beta_known_values() {
        assert!((beta(1.0_f64, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((beta(0.5_f64, 0.5).unwrap() - PI).abs() < 1e-14 * PI);
        assert!((beta(2.0_f64, 3.0).unwrap() - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn binomials() {
        assert_eq!(gen_binomial(0.37_f64, 0), 1.0);
        assert!((gen_binomial(0.5_f64, 2) + 0.125).abs() < 1e-16);
        assert!((gen_binomial(0.5_f64, 3) - 0.0625).abs() < 1e-16);
        assert!((gen_binomial(0.5_f64, 1) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn odd_harmonic_values() {
        assert_eq!(odd_harmonic::<f64>(1), 0.0);
        assert_eq!(odd_harmonic::<f64>(2), 1.0);
        assert!((odd_harmonic::<f64>(3) - 4.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn single_precision_instantiation() {
        let b = beta(0.5_f32, 0.5_f32).unwrap();
        assert!((b - std::f32::consts::PI).abs() < 1e-5);
        assert!((gamma(5.0_f32).unwrap() - 24.0).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn beta_is_symmetric(x in 0.1f64..5.0, y in 0.1f64..5.0) {
            let a = beta(x, y).unwrap();
            let b = beta(y, x).unwrap();
            prop_assert!((a - b).abs() <= 1e-14 * a);
        }

        #[test]
        fn ln_gamma_recurrence(x in 0.01f64..30.0) {
            let lhs = ln_gamma(x + 1.0).unwrap();
            let rhs = ln_gamma(x).unwrap() + x.ln();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }

        #[test]
        fn integer_binomials(n in 0u64..40, k in 0usize..40) {
            prop_assume!(k as u64 <= n);
            let mut exact = 1u128;
            for i in 0..k as u128 {
                exact = exact * (n as u128 - i) / (i + 1);
            }
            let got = gen_binomial(n as f64, k);
            prop_assert!((got - exact as f64).abs() <= 1e-12 * exact as f64);
        }
    }
}

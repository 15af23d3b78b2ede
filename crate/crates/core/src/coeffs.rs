//! Coefficient tables of the quantization condition.
//!
//! The coefficient vector `a` is stored densely, but indexing is 1-based in
//! every public accessor: `a(k)` is the coefficient of `z^(m-k)` in
//! `P(z) = a_1 z^(m-1) + ... + a_(m-1) z`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::scalar::{from_i64, from_usize, lit, Real};
use crate::specfun::{beta, gen_binomial, odd_harmonic};

/// The operator data (m, ell, a).
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec<T> {
    m: usize,
    ell: usize,
    a: Vec<Complex<T>>,
}

impl<T: Real> ProblemSpec<T> {
    pub fn new(m: usize, ell: usize, a: Vec<Complex<T>>) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidSpec(format!("degree m = {m} must be at least 3")));
        }
        if ell < 1 || ell > m - 1 {
            return Err(Error::InvalidSpec(format!("boundary index ell = {ell} outside 1..={}", m - 1)));
        }
        if a.len() != m - 1 {
            return Err(Error::InvalidSpec(format!(
                "coefficient vector has length {}, expected m - 1 = {}",
                a.len(),
                m - 1
            )));
        }
        if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidSpec("coefficients must be finite".into()));
        }
        Ok(Self { m, ell, a })
    }

    /// The unperturbed problem `P = 0`.
    pub fn zero(m: usize, ell: usize) -> Result<Self> {
        Self::new(m, ell, vec![Complex::new(T::zero(), T::zero()); m.saturating_sub(1)])
    }

    /// Real coefficient vector convenience constructor.
    pub fn real(m: usize, ell: usize, a: &[T]) -> Result<Self> {
        Self::new(m, ell, a.iter().map(|&x| Complex::new(x, T::zero())).collect())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.a
    }

    /// a_k, 1-based.
    pub fn a(&self, k: usize) -> Complex<T> {
        self.a[k - 1]
    }

    /// Same (m, ell) with a different coefficient vector.
    pub fn with_coeffs(&self, a: Vec<Complex<T>>) -> Result<Self> {
        Self::new(self.m, self.ell, a)
    }

    /// floor((m + 2) / 2), the number of terms in the quantization condition.
    pub fn max_order(&self) -> usize {
        (self.m + 2) / 2
    }

    pub fn is_real(&self) -> bool {
        self.a.iter().all(|z| z.im == T::zero())
    }

    /// The problem obtained by z -> -z: (m, m - ell, ((-1)^(m-k) a_k)_k).
    pub fn reflected(&self) -> Self {
        let a = self.a.iter().enumerate().map(|(i, &z)| if (self.m - (i + 1)) % 2 == 0 { z } else { -z }).collect();
        Self { m: self.m, ell: self.m - self.ell, a }
    }
}

/// A multi-index alpha of length m - 1 (entry i is the exponent of a_(i+1)).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    pub alpha: Vec<usize>,
}

impl MultiIndex {
    /// |alpha|
    pub fn weight(&self) -> usize {
        self.alpha.iter().sum()
    }

    /// alpha . (1, 2, ..., m-1)
    pub fn degree(&self) -> usize {
        self.alpha.iter().enumerate().map(|(i, &n)| (i + 1) * n).sum()
    }

    /// The multinomial |alpha|! / alpha!.
    pub fn multinomial<T: Real>(&self) -> T {
        let mut out = T::one();
        let mut top = 0usize;
        for &n in &self.alpha {
            for i in 1..=n {
                top += 1;
                out = out * from_usize::<T>(top) / from_usize::<T>(i);
            }
        }
        out
    }

    /// c^alpha, with `c[i]` the value attached to index i + 1.
    pub fn monomial<T: Real>(&self, c: &[Complex<T>]) -> Complex<T> {
        self.alpha
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .fold(Complex::from(T::one()), |acc, (i, &n)| acc * c[i].powi(n as i32))
    }
}

/// All alpha in N^(m-1) with |alpha| = k and alpha . beta = j.
///
/// Generated as partitions of j into exactly k parts from 1..=min(j, m-1).
pub fn multi_indices(m: usize, j: usize, k: usize) -> Vec<MultiIndex> {
    let len = m.saturating_sub(1);
    let mut out = Vec::new();
    if len == 0 || k == 0 || k > j {
        return out;
    }
    let mut counts = vec![0usize; len];
    partitions(j, k, j.min(len), &mut counts, &mut out);
    out
}

fn partitions(remaining: usize, parts: usize, max_part: usize, counts: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
    if parts == 0 {
        if remaining == 0 {
            out.push(MultiIndex { alpha: counts.clone() });
        }
        return;
    }
    // largest part first; remaining parts must fit below it
    let hi = max_part.min(remaining);
    for p in (1..=hi).rev() {
        if p * parts < remaining {
            break;
        }
        if remaining - p < parts - 1 {
            continue;
        }
        counts[p - 1] += 1;
        partitions(remaining - p, parts - 1, p, counts, out);
        counts[p - 1] -= 1;
    }
}

/// Sum over |alpha| = k, alpha . beta = j of (k!/alpha!) c^alpha.
pub fn multinomial_sum<T: Real>(c: &[Complex<T>], m: usize, j: usize, k: usize) -> Complex<T> {
    multi_indices(m, j, k)
        .iter()
        .fold(Complex::from(T::zero()), |acc, alpha| acc + alpha.monomial(c) * alpha.multinomial::<T>())
}

/// b_{j,k}(a) = C(1/2, k) sum (k!/alpha!) a^alpha.
pub fn b_jk<T: Real>(spec: &ProblemSpec<T>, j: usize, k: usize) -> Complex<T> {
    if k == 0 || k > j {
        return Complex::from(T::zero());
    }
    multinomial_sum(&spec.a, spec.m, j, k) * gen_binomial(lit::<T>(0.5), k)
}

/// b_j(a) = sum_{k=1}^{j} b_{j,k}(a): the z^(-j) coefficient of sqrt(1 + a_1/z + ...).
pub fn b_j<T: Real>(spec: &ProblemSpec<T>, j: usize) -> Complex<T> {
    (1..=j).fold(Complex::from(T::zero()), |acc, k| acc + b_jk(spec, j, k))
}

/// nu(a): zero for odd m, b_(m/2 + 1)(a) for even m.
pub fn nu<T: Real>(spec: &ProblemSpec<T>) -> Complex<T> {
    if spec.m % 2 == 1 {
        Complex::from(T::zero())
    } else {
        b_j(spec, spec.m / 2 + 1)
    }
}

fn k_domain_error(m: usize, j: usize, k: usize) -> Error {
    Error::Domain { func: "k_constant", detail: format!("(m, j, k) = ({m}, {j}, {k}) outside the tabulated range") }
}

/// Which closed form / defining integral applies to K_{m,j,k}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum KCase {
    /// (j, k) = (0, 0) or 1 <= k <= j <= (m+1)/2: power-difference integrand.
    Power,
    /// m even, 1 <= k <= j = (m+2)/2: logarithmic integrand.
    Log,
}

fn k_case(m: usize, j: usize, k: usize) -> Option<KCase> {
    if m < 3 {
        return None;
    }
    if j == 0 && k == 0 {
        return Some(KCase::Power);
    }
    if k >= 1 && k <= j && 2 * j <= m + 1 {
        return Some(KCase::Power);
    }
    if m % 2 == 0 && k >= 1 && k <= j && 2 * j == m + 2 {
        return Some(KCase::Log);
    }
    None
}

/// Every (j, k) with 1 <= k <= j for which K_{m,j,k} is defined.
pub fn k_admissible(m: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 1..=(m + 2) / 2 {
        for k in 1..=j {
            if k_case(m, j, k).is_some() {
                out.push((j, k));
            }
        }
    }
    out
}

/// K_{m,j,k} from its gamma/beta closed form.
pub fn k_closed<T: Real>(m: usize, j: usize, k: usize) -> Result<T> {
    let mt = from_usize::<T>(m);
    match k_case(m, j, k) {
        Some(KCase::Power) if j == 0 => Ok(k_m0(m)),
        Some(KCase::Power) if j == 1 && k == 1 => Ok(-lit::<T>(2.0) / mt),
        Some(KCase::Power) if j >= 2 => {
            let jm = from_usize::<T>(j - 1) / mt;
            let kt = from_usize::<T>(k);
            let prefactor = (lit::<T>(2.0) * kt - T::one()) / from_i64::<T>(m as i64 + 2 - 2 * j as i64);
            Ok(-prefactor * beta(kt - jm, lit::<T>(0.5) + jm)?)
        }
        Some(KCase::Log) => Ok(lit::<T>(2.0) / mt * (T::LN_2() - odd_harmonic::<T>(k))),
        _ => Err(k_domain_error(m, j, k)),
    }
}

/// K_{m,0} = sqrt(pi) Gamma(1 + 1/m) / (2 cos(pi/m) Gamma(3/2 + 1/m)).
pub fn k_m0<T: Real>(m: usize) -> T {
    let inv = T::one() / from_usize::<T>(m);
    let ratio = (crate::specfun::ln_gamma(T::one() + inv).expect("positive")
        - crate::specfun::ln_gamma(lit::<T>(1.5) + inv).expect("positive"))
    .exp();
    T::PI().sqrt() * ratio / (lit::<T>(2.0) * (T::PI() * inv).cos())
}

/// K_{m,j,k} by adaptive quadrature of its defining improper integral.
///
/// `[0, inf)` is split at 1; the tail is mapped by t = 1/s and written with
/// `expm1`/`ln_1p` so the cancelling difference is evaluated without loss.
/// Square-root substitutions remove the half-integer powers that appear for
/// odd m.
pub fn k_quad<T: Real>(m: usize, j: usize, k: usize) -> Result<T> {
    let case = k_case(m, j, k).ok_or_else(|| k_domain_error(m, j, k))?;
    let opts = QuadOptions { abs_tol: lit::<T>(1e-13), rel_tol: lit::<T>(1e-13), max_intervals: 4000 };
    let two = lit::<T>(2.0);
    let h = from_usize::<T>(k) - lit::<T>(0.5);
    let mi = m as i32;
    let ji = j as i32;
    let ki = k as i32;
    let (head, tail) = match case {
        KCase::Power => {
            // t = u^2 on [0, 1]
            let head = integrate(
                |u: T| {
                    let u2m = u.powi(2 * mi);
                    two * (u.powi(2 * (mi * ki - ji) + 1) * (T::one() + u2m).powf(-h) - u.powi(mi - 2 * ji + 1))
                },
                T::zero(),
                T::one(),
                &opts,
            )?;
            // t = 1/v^2 on [1, inf)
            let tail = integrate(
                |v: T| {
                    if v == T::zero() {
                        return T::zero();
                    }
                    two * v.powi(2 * ji - 3 - mi) * (-h * v.powi(2 * mi).ln_1p()).exp_m1()
                },
                T::zero(),
                T::one(),
                &opts,
            )?;
            (head, tail)
        }
        KCase::Log => {
            let head = integrate(
                |t: T| t.powi(mi * ki - mi / 2 - 1) * (T::one() + t.powi(mi)).powf(-h) - T::one() / (T::one() + t),
                T::zero(),
                T::one(),
                &opts,
            )?;
            // t = 1/s on [1, inf)
            let tail = integrate(
                |s: T| {
                    let first = if s == T::zero() { T::zero() } else { (-h * s.powi(mi).ln_1p()).exp_m1() / s };
                    first + T::one() / (T::one() + s)
                },
                T::zero(),
                T::one(),
                &opts,
            )?;
            (head, tail)
        }
    };
    let error = head.error + tail.error;
    let limit = lit::<T>(1e-10);
    if error > limit {
        return Err(Error::Quadrature { estimate: error.to_f64().unwrap_or(f64::NAN), tolerance: 1e-10 });
    }
    Ok(head.value + tail.value)
}

/// K_{m,j}(a) = sum_k b_{j,k}(a) K_{m,j,k}.
pub fn k_mj<T: Real>(spec: &ProblemSpec<T>, j: usize) -> Result<Complex<T>> {
    if j == 0 {
        return Ok(Complex::from(k_m0::<T>(spec.m)));
    }
    let mut sum = Complex::from(T::zero());
    for k in 1..=j {
        sum += b_jk(spec, j, k) * k_closed::<T>(spec.m, j, k)?;
    }
    Ok(sum)
}

/// eta_{m,ell}(a): nonzero only for even m and odd ell.
pub fn eta<T: Real>(spec: &ProblemSpec<T>) -> Complex<T> {
    let (m, ell) = (spec.m, spec.ell);
    if m % 2 == 1 || ell % 2 == 0 {
        return Complex::from(T::zero());
    }
    let top = (m + 2) / 2;
    let sum = (1..=top).fold(Complex::from(T::zero()), |acc, k| acc + b_jk(spec, top, k));
    let sign = if ((ell - 1) / 2) % 2 == 0 { T::one() } else { -T::one() };
    sum * Complex::new(T::zero(), sign * lit::<T>(4.0) * T::PI() / from_usize::<T>(m))
}

/// The coefficient d_{ell,j}(a) of lambda^(1/2 - (j-1)/m) in the quantization condition.
pub fn d_lj<T: Real>(spec: &ProblemSpec<T>, j: usize) -> Result<Complex<T>> {
    let (m, ell) = (spec.m, spec.ell);
    let mt = from_usize::<T>(m);
    let pi = T::PI();
    let i = Complex::new(T::zero(), T::one());
    if j == 0 {
        let inv = T::one() / mt;
        let ratio = (crate::specfun::ln_gamma(T::one() + inv)? - crate::specfun::ln_gamma(lit::<T>(1.5) + inv)?).exp();
        let s = (from_usize::<T>(ell) * pi / mt).sin();
        return Ok(i * (lit::<T>(2.0) * pi.sqrt() * s * ratio));
    }
    if 2 * j <= m + 1 {
        let jm = from_usize::<T>(j - 1) * pi / mt;
        let trig = (from_usize::<T>(ell) * jm).sin() * jm.cos();
        let mut sum = Complex::from(T::zero());
        for k in 1..=j {
            let sign = if ((ell + 1) * k) % 2 == 0 { T::one() } else { -T::one() };
            sum += b_jk(spec, j, k) * (sign * k_closed::<T>(m, j, k)?);
        }
        return Ok(-i * lit::<T>(4.0) * sum * trig);
    }
    if m % 2 == 0 && 2 * j == m + 2 {
        return Ok(eta(spec));
    }
    Err(Error::Index { func: "d_lj", index: j, range: format!("0..={}", spec.max_order()) })
}

/// d_{ell,j}(a) for j = 0..=floor((m+2)/2).
pub fn d_all<T: Real>(spec: &ProblemSpec<T>) -> Result<Vec<Complex<T>>> {
    (0..=spec.max_order()).map(|j| d_lj(spec, j)).collect()
}

/// An element of (1/2)Z, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HalfInt(pub i64);

impl HalfInt {
    pub fn from_int(n: i64) -> Self {
        HalfInt(2 * n)
    }

    pub fn halves(self) -> i64 {
        self.0
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

/// omega^(num/den) with omega = exp(2 pi i / (m + 2)), reduced exactly before
/// the exponential is taken.
pub fn omega_pow<T: Real>(m: usize, num: i64, den: i64) -> Complex<T> {
    let period = den * (m as i64 + 2);
    let r = num.rem_euclid(period);
    let angle = lit::<T>(2.0) * T::PI() * from_i64::<T>(r) / from_i64::<T>(period);
    Complex::new(angle.cos(), angle.sin())
}

/// G^s(a) = (omega^((m+1)s) a_1, omega^(m s) a_2, ..., omega^(3s) a_(m-1)).
pub fn g_action<T: Real>(a: &[Complex<T>], s: HalfInt) -> Vec<Complex<T>> {
    let m = a.len() + 1;
    a.iter()
        .enumerate()
        .map(|(i, &z)| {
            let k = (i + 1) as i64;
            z * omega_pow::<T>(m, (m as i64 + 2 - k) * s.halves(), 2)
        })
        .collect()
}

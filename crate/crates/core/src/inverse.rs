//! Recovering potential coefficients from eigenvalue data.
//!
//! The eigenvalue expansion `lambda_n = lambda_(n,0) + sum_j e_j lambda_(n,0)^(1 - j/m)`
//! is fitted by least squares, and the coefficients `a_j` are then read off
//! one at a time: `e_j` depends on `a_1..a_j` only and is affine in `a_j`
//! unless `(j-1) ell` is a multiple of `m`, in which case `a_j` has to be
//! supplied.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::asym::{compute_e, lambda_n0};
use crate::coeffs::ProblemSpec;
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct InverseProblem<T> {
    pub m: usize,
    pub ell: usize,
    /// `(n, lambda_n)` pairs; rows with `n < n_min` are ignored.
    pub eigs: Vec<(usize, Complex<T>)>,
    /// Values of `a_j` that cannot be recovered, keyed by `j`.
    pub known: BTreeMap<usize, Complex<T>>,
    /// Highest coefficient index to reconstruct, at most `(m+1)/2`.
    pub j_max: usize,
    pub n_min: usize,
    /// Weight row `n` by `lambda_(n,0)^(j_max/m)`.
    pub weighted: bool,
    /// Highest `j` in the regression basis. Defaults to `floor((m+2)/2)`, the
    /// full expansion; larger values add terms that only absorb truncation
    /// error.
    pub fit_order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EFit<T> {
    /// Indexed by `j`; entries 0 and 1 are zero.
    pub e: Vec<Complex<T>>,
    pub cond: T,
    pub rows: usize,
}

/// Indices `j <= j_max` whose `a_j` the data cannot determine.
pub fn required_known(m: usize, ell: usize, j_max: usize) -> Vec<usize> {
    (1..=j_max).filter(|j| ((j - 1) * ell) % m == 0).collect()
}

impl<T: Real> InverseProblem<T> {
    pub fn new(m: usize, ell: usize, eigs: Vec<(usize, Complex<T>)>, j_max: usize) -> Self {
        Self { m, ell, eigs, known: BTreeMap::new(), j_max, n_min: 10, weighted: false, fit_order: None }
    }

    pub fn with_known(mut self, j: usize, a: Complex<T>) -> Self {
        self.known.insert(j, a);
        self
    }

    fn zero_spec(&self) -> Result<ProblemSpec<T>> {
        ProblemSpec::zero(self.m, self.ell)
    }

    pub fn order(&self) -> usize {
        self.fit_order.unwrap_or((self.m + 2) / 2).max(self.j_max).max(2)
    }

    pub fn validate(&self) -> Result<()> {
        self.zero_spec()?;
        if self.j_max < 1 || 2 * self.j_max > self.m + 1 {
            return Err(Error::InvalidSpec(format!("j_max = {} outside 1..=(m+1)/2 for m = {}", self.j_max, self.m)));
        }
        let missing: Vec<usize> =
            required_known(self.m, self.ell, self.j_max).into_iter().filter(|j| !self.known.contains_key(j)).collect();
        if !missing.is_empty() {
            return Err(Error::Hypothesis(format!(
                "a_j must be supplied for j in {missing:?}: (j-1) ell is a multiple of m = {}",
                self.m
            )));
        }
        Ok(())
    }
}

/// Least-squares estimate of `e_2..e_order` from the eigenvalue data.
pub fn fit_e<T: Real>(problem: &InverseProblem<T>) -> Result<EFit<T>> {
    problem.validate()?;
    let zero = problem.zero_spec()?;
    let order = problem.order();
    let m = from_usize::<T>(problem.m);
    let rows_in: Vec<&(usize, Complex<T>)> = problem.eigs.iter().filter(|(n, _)| *n >= problem.n_min).collect();
    let need = (2 * problem.j_max).max(order);
    if rows_in.len() < need {
        return Err(Error::Domain {
            func: "fit_e",
            detail: format!("{} eigenvalues with n >= {}, need at least {need}", rows_in.len(), problem.n_min),
        });
    }
    let mut a = Vec::with_capacity(rows_in.len());
    let mut b = Vec::with_capacity(rows_in.len());
    for &&(n, lambda) in &rows_in {
        let l0 = lambda_n0(&zero, n);
        let w = if problem.weighted { l0.powf(from_usize::<T>(problem.j_max) / m) } else { T::one() };
        a.push((2..=order).map(|j| w * l0.powf(T::one() - from_usize::<T>(j) / m)).collect());
        b.push((lambda - l0) * w);
    }
    let ls = T::lstsq(&a, &b)?;
    if !(ls.cond <= lit(1e12)) {
        return Err(Error::RankDeficient { cond: ls.cond.to_f64().unwrap_or(f64::INFINITY) });
    }
    let mut e = vec![Complex::from(T::zero()); 2];
    e.extend(ls.x);
    Ok(EFit { e, cond: ls.cond, rows: rows_in.len() })
}

/// `a_1..a_(j_max)` from fitted `e_j`, solving the affine relation for each
/// `a_j` in turn with the earlier ones fixed.
pub fn recover_a<T: Real>(problem: &InverseProblem<T>, fit: &EFit<T>) -> Result<Vec<Complex<T>>> {
    problem.validate()?;
    let zero = Complex::from(T::zero());
    let mut a = vec![zero; problem.m - 1];
    for j in 1..=problem.j_max {
        if ((j - 1) * problem.ell) % problem.m == 0 {
            a[j - 1] = problem.known[&j];
            continue;
        }
        let target =
            *fit.e.get(j).ok_or(Error::Index { func: "recover_a", index: j, range: format!("2..{}", fit.e.len()) })?;
        let probe = |v: Complex<T>| -> Result<Complex<T>> {
            let mut trial = a.clone();
            trial[j - 1] = v;
            Ok(compute_e(&ProblemSpec::new(problem.m, problem.ell, trial)?)?[j])
        };
        let at0 = probe(zero)?;
        let slope = probe(Complex::from(T::one()))? - at0;
        if slope.norm() < lit(1e-14) {
            return Err(Error::Hypothesis(format!("e_{j} does not depend on a_{j}; it has to be declared known")));
        }
        a[j - 1] = (target - at0) / slope;
    }
    a.truncate(problem.j_max);
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asym::AsymptoticModel;

    type C = Complex<f64>;

    fn asym_data(spec: &ProblemSpec<f64>, ns: std::ops::RangeInclusive<usize>) -> Vec<(usize, C)> {
        let model = AsymptoticModel::new(spec).unwrap();
        ns.map(|n| (n, model.asym_eigenvalue(n))).collect()
    }

    #[test]
    fn required_indices() {
        assert_eq!(required_known(5, 1, 3), vec![1]);
        assert_eq!(required_known(4, 2, 2), vec![1]);
        assert_eq!(required_known(6, 3, 3), vec![1, 3]);
    }

    #[test]
    fn missing_known_is_a_hypothesis_error() {
        let p = InverseProblem::<f64>::new(5, 1, vec![], 3);
        assert!(matches!(p.validate(), Err(Error::Hypothesis(_))));
        let p = p.with_known(1, C::new(0.0, 0.0));
        assert!(p.validate().is_ok());
        let mut q = p.clone();
        q.j_max = 4;
        assert!(matches!(q.validate(), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn too_few_points() {
        let spec = ProblemSpec::zero(5, 1).unwrap();
        let p = InverseProblem::new(5, 1, asym_data(&spec, 10..=12), 3).with_known(1, C::new(0.0, 0.0));
        assert!(matches!(fit_e(&p), Err(Error::Domain { .. })));
    }

    #[test]
    fn roundtrip_from_expansion() {
        let spec = ProblemSpec::real(5, 1, &[0.0, 0.3, -0.2, 0.1]).unwrap();
        let p = InverseProblem::new(5, 1, asym_data(&spec, 20..=60), 3).with_known(1, C::new(0.0, 0.0));
        let fit = fit_e(&p).unwrap();
        let e = compute_e(&spec).unwrap();
        for j in 2..=3 {
            assert!((fit.e[j] - e[j]).norm() <= 1e-8 * e[j].norm());
        }
        let a = recover_a(&p, &fit).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a[0], C::new(0.0, 0.0));
        assert!((a[1] - C::new(0.3, 0.0)).norm() < 1e-6);
        assert!((a[2] - C::new(-0.2, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn known_values_pass_through_exactly() {
        let a1 = C::new(0.37, -0.11);
        let spec =
            ProblemSpec::new(6, 3, vec![a1, C::new(0.2, 0.1), C::new(-0.4, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)])
                .unwrap();
        let p =
            InverseProblem::new(6, 3, asym_data(&spec, 20..=60), 3).with_known(1, a1).with_known(3, C::new(-0.4, 0.0));
        let a = recover_a(&p, &fit_e(&p).unwrap()).unwrap();
        assert_eq!(a[0], a1);
        assert_eq!(a[2], C::new(-0.4, 0.0));
        assert!((a[1] - C::new(0.2, 0.1)).norm() < 1e-6);
    }

    #[test]
    fn zero_potential_fits_zero() {
        let spec = ProblemSpec::zero(5, 2).unwrap();
        let p = InverseProblem::new(5, 2, asym_data(&spec, 10..=40), 3).with_known(1, C::new(0.0, 0.0));
        let fit = fit_e(&p).unwrap();
        assert!(fit.e.iter().all(|e| e.norm() < 1e-6));
    }

    #[test]
    fn weighting_gives_the_same_noiseless_answer() {
        let spec = ProblemSpec::real(5, 1, &[0.1, -0.2, 0.3, 0.0]).unwrap();
        let mut p = InverseProblem::new(5, 1, asym_data(&spec, 20..=60), 3).with_known(1, C::new(0.1, 0.0));
        let plain = recover_a(&p, &fit_e(&p).unwrap()).unwrap();
        p.weighted = true;
        let weighted = recover_a(&p, &fit_e(&p).unwrap()).unwrap();
        for (x, y) in plain.iter().zip(&weighted) {
            assert!((x - y).norm() < 1e-7);
        }
    }
}

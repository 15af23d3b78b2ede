//! Dense least squares for small real design matrices with complex data.

use nalgebra::{DMatrix, RealField};
use num_complex::Complex;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares<T> {
    pub x: Vec<Complex<T>>,
    /// Singular values of the design matrix, largest first.
    pub singular_values: Vec<T>,
    /// Ratio of the extreme singular values (infinite when rank deficient).
    pub cond: T,
}

/// Scalars with an SVD backend.
pub trait Dense: Sized {
    /// Minimizes `|A x - b|` for the row-major `a` (every row the same length).
    fn lstsq(a: &[Vec<Self>], b: &[Complex<Self>]) -> Result<LeastSquares<Self>>;
}

fn lstsq_svd<T: RealField + Copy>(a: &[Vec<T>], b: &[Complex<T>]) -> Result<LeastSquares<T>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || rows != b.len() || a.iter().any(|r| r.len() != cols) {
        return Err(Error::Domain {
            func: "lstsq",
            detail: format!("{rows} rows, {cols} columns, {} right-hand sides", b.len()),
        });
    }
    let m = DMatrix::from_fn(rows, cols, |i, j| a[i][j]);
    let rhs = DMatrix::from_fn(rows, 2, |i, j| if j == 0 { b[i].re } else { b[i].im });
    let svd = m.svd(true, true);
    let mut sv: Vec<T> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    let hi = sv[0];
    let lo = *sv.last().unwrap();
    let cond = if lo > T::zero() { hi / lo } else { T::one() / T::zero() };
    let eps = hi * T::default_epsilon() * nalgebra::convert::<f64, T>(rows.max(cols) as f64);
    let sol = svd.solve(&rhs, eps).map_err(|e| Error::Domain { func: "lstsq", detail: e.to_string() })?;
    let x = (0..cols).map(|j| Complex::new(sol[(j, 0)], sol[(j, 1)])).collect();
    Ok(LeastSquares { x, singular_values: sv, cond })
}

impl Dense for f64 {
    fn lstsq(a: &[Vec<Self>], b: &[Complex<Self>]) -> Result<LeastSquares<Self>> {
        lstsq_svd(a, b)
    }
}

impl Dense for f32 {
    fn lstsq(a: &[Vec<Self>], b: &[Complex<Self>]) -> Result<LeastSquares<Self>> {
        lstsq_svd(a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_recovers_coefficients() {
        let a: Vec<Vec<f64>> = (1..=6).map(|n| vec![1.0, n as f64, (n * n) as f64]).collect();
        let truth = [Complex::new(1.0, -2.0), Complex::new(0.5, 0.0), Complex::new(-0.25, 3.0)];
        let b: Vec<_> = a.iter().map(|r| r.iter().zip(&truth).map(|(x, t)| t * x).sum()).collect();
        let ls = f64::lstsq(&a, &b).unwrap();
        for (x, t) in ls.x.iter().zip(&truth) {
            assert!((x - t).norm() < 1e-12);
        }
        assert!(ls.cond > 1.0 && ls.cond.is_finite());
    }

    #[test]
    fn overdetermined_residual_is_orthogonal() {
        let a = vec![vec![1.0], vec![1.0], vec![1.0]];
        let b = vec![Complex::new(1.0, 0.0), Complex::new(2.0, 1.0), Complex::new(6.0, 2.0)];
        let ls = f64::lstsq(&a, &b).unwrap();
        assert!((ls.x[0] - Complex::new(3.0, 1.0)).norm() < 1e-14);
        assert_eq!(ls.cond, 1.0);
    }

    #[test]
    fn collinear_columns_have_infinite_or_huge_condition() {
        let a: Vec<Vec<f64>> = (0..4).map(|n| vec![n as f64, 2.0 * n as f64]).collect();
        let b = vec![Complex::new(0.0, 0.0); 4];
        let ls = f64::lstsq(&a, &b).unwrap();
        assert!(ls.cond > 1e12);
    }

    #[test]
    fn shape_mismatch() {
        assert!(f64::lstsq(&[vec![1.0]], &[]).is_err());
        assert!(f32::lstsq(&[vec![1.0], vec![1.0, 2.0]], &[Complex::new(0.0, 0.0); 2]).is_err());
    }
}

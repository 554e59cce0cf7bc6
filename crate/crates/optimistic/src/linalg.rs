//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Systems whose pivot-ratio condition estimate exceeds this are rejected.
pub const CONDITION_LIMIT: f64 = 1e14;

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

/// Solves `a x = rhs` with LU and partial pivoting.
///
/// The condition estimate is the ratio of the largest to the smallest pivot
/// magnitude; it is a lower bound on the true 2-norm condition number.
pub fn solve(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows().min(u.ncols()) {
        let p = u[(i, i)].abs();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if !(lo > 0.0) || !hi.is_finite() {
        return Err(Error::Singular);
    }
    let estimate = hi / lo;
    if estimate > CONDITION_LIMIT {
        return Err(Error::IllConditioned { estimate });
    }
    lu.solve(rhs).ok_or(Error::Singular)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0]);
        let x = solve(&a, &DVector::from_row_slice(&[-1.0, 0.0])).unwrap();
        assert!((x[0] + 0.5).abs() < 1e-15 && (x[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn singular_and_ill_conditioned_are_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(solve(&a, &DVector::zeros(2)), Err(Error::Singular));
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-16]);
        assert!(matches!(solve(&b, &DVector::zeros(2)), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 0.0, 0.0, -4.0, 0.0]);
        assert!((spectral_norm(&a) - 4.0).abs() < 1e-12);
    }
}

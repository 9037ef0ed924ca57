//! Small dense linear-algebra helpers with explicit conditioning checks.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{modulus, Cplx, Real};

/// Relative eigenvalue floor for the coupling matrix (f64 value; raised to
/// `100 * eps` for coarser scalar types).
pub const EIG_FLOOR: f64 = 1e-12;

/// Reciprocal-condition floor for network solves (f64 value; raised to
/// `10 * eps` for coarser scalar types).
pub const RCOND_FLOOR: f64 = 1e-13;

pub(crate) fn eig_floor<T: Real>() -> f64 {
    EIG_FLOOR.max(100.0 * T::default_epsilon().as_f64())
}

pub(crate) fn rcond_floor<T: Real>() -> f64 {
    RCOND_FLOOR.max(10.0 * T::default_epsilon().as_f64())
}

fn norm1<T: Real>(a: &DMatrix<Cplx<T>>) -> T {
    a.column_iter()
        .map(|col| col.iter().fold(T::zero(), |acc, z| acc + modulus(*z)))
        .fold(T::zero(), |acc, s| if s > acc { s } else { acc })
}

/// Inverse of a complex square matrix, rejected when `1 / (|A|_1 |A^-1|_1)`
/// falls below [`RCOND_FLOOR`].
pub fn checked_inverse<T: Real>(a: &DMatrix<Cplx<T>>) -> Result<DMatrix<Cplx<T>>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let floor = rcond_floor::<T>();
    let singular = |rcond: f64| Error::SingularNetwork { rcond, floor };
    let inv = a.clone().lu().try_inverse().ok_or_else(|| singular(0.0))?;
    let rcond = 1.0 / (norm1(a).as_f64() * norm1(&inv).as_f64());
    if !rcond.is_finite() || rcond < floor {
        return Err(singular(if rcond.is_finite() { rcond } else { 0.0 }));
    }
    Ok(inv)
}

/// Solves `A x = b` through [`checked_inverse`].
pub fn checked_solve<T: Real>(a: &DMatrix<Cplx<T>>, b: &DVector<Cplx<T>>) -> Result<DVector<Cplx<T>>> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    Ok(checked_inverse(a)? * b)
}

/// Unconjugated dot product `x^T y`.
pub(crate) fn dot_t<T: Real>(x: &DVector<Cplx<T>>, y: &DVector<Cplx<T>>) -> Cplx<T> {
    x.iter().zip(y.iter()).fold(Cplx::new(T::zero(), T::zero()), |acc, (a, b)| acc + *a * *b)
}

pub(crate) fn complexify<T: Real>(a: &DMatrix<T>) -> DMatrix<Cplx<T>> {
    a.map(|x| Cplx::new(x, T::zero()))
}

pub(crate) fn is_symmetric<T: Real>(a: &DMatrix<Cplx<T>>, tol: T) -> bool {
    a.is_square()
        && (0..a.nrows()).all(|i| (0..i).all(|j| modulus(a[(i, j)] - a[(j, i)]) <= tol))
}

/// Frobenius norm of a complex matrix.
pub(crate) fn fro<T: Real>(a: &DMatrix<Cplx<T>>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

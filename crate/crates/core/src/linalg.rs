//! Small dense linear algebra: LU factorization with partial pivoting.
//!
//! Policy evaluation solves `(I - gamma * P) v = c`. That matrix is strictly
//! diagonally dominant for any stochastic `P` and `gamma < 1`, so a plain
//! LU solve is well conditioned at every size this crate targets.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solve the dense system `a * x = b` in place via LU with partial pivoting.
///
/// `a` is consumed as the factorization workspace.
pub fn lu_solve<T: Scalar>(mut a: Array2<T>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "lu_solve expects a square system, got {}x{} matrix and rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }

    for col in 0..n {
        // Partial pivoting: largest magnitude entry on or below the diagonal.
        let mut pivot_row = col;
        let mut pivot_mag = a[(col, col)].abs();
        for row in col + 1..n {
            let mag = a[(row, col)].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if pivot_mag == T::zero() || !pivot_mag.is_finite() {
            return Err(Error::NonFinite(format!(
                "singular or non-finite pivot in column {col}"
            )));
        }
        if pivot_row != col {
            for k in 0..n {
                let tmp = a[(col, k)];
                a[(col, k)] = a[(pivot_row, k)];
                a[(pivot_row, k)] = tmp;
            }
            b.swap(col, pivot_row);
        }

        let pivot = a[(col, col)];
        for row in col + 1..n {
            let factor = a[(row, col)] / pivot;
            if factor != T::zero() {
                for k in col + 1..n {
                    let update = factor * a[(col, k)];
                    a[(row, k)] = a[(row, k)] - update;
                }
                b[row] = b[row] - factor * b[col];
            }
            a[(row, col)] = factor;
        }
    }

    // Back substitution.
    let mut x = b;
    for row in (0..n).rev() {
        let mut acc = x[row];
        for k in row + 1..n {
            acc = acc - a[(row, k)] * x[k];
        }
        x[row] = acc / a[(row, row)];
    }
    Ok(x)
}

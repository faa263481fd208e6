//! Small dense solver used by the first-passage and stationarity systems.

use crate::{Error, Result, Scalar};

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
///
/// `a` is row-major and consumed. Fails with the offending pivot magnitude
/// when the system is numerically singular.
pub(crate) fn solve_dense<F: Scalar>(mut a: Vec<Vec<F>>, mut b: Vec<F>) -> Result<Vec<F>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::invalid("solve_dense needs a square system"));
    }
    let tiny = F::from_f64_lossy(1e-300).max(F::min_positive_value());
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).expect("finite pivots"))
            .expect("nonempty column");
        if pivot < tiny {
            return Err(Error::numerical(format!(
                "singular linear system: pivot magnitude {pivot} at column {col}"
            )));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            if factor == F::zero() {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[r][c] = a[r][c] - factor * v;
            }
            b[r] = b[r] - factor * b[col];
        }
    }
    let mut x = vec![F::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc = acc - a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

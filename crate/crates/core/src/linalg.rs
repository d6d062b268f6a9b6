//! Small dense linear algebra (boundary-condition corrections, optimizer
//! steps), on top of nalgebra.

use nalgebra::{DMatrix, DVector};

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

/// Square solve by LU with partial pivoting; `None` when singular.
pub(crate) fn solve(matrix: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let x = to_matrix(matrix).lu().solve(&DVector::from_column_slice(rhs))?;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub(crate) fn cholesky(matrix: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let l = to_matrix(matrix).cholesky()?.unpack();
    Some(l.row_iter().map(|r| r.iter().copied().collect()).collect())
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
pub(crate) fn solve_upper_transposed(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let upper = to_matrix(l).transpose();
    let x = upper
        .solve_upper_triangular(&DVector::from_column_slice(b))
        .expect("Cholesky factor has a positive diagonal");
    x.iter().copied().collect()
}

/// 1-norm condition number, `f64::INFINITY` when singular.
pub(crate) fn condition_number(matrix: &[Vec<f64>]) -> f64 {
    let m = to_matrix(matrix);
    let norm1 = |m: &DMatrix<f64>| {
        m.column_iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match m.clone().try_inverse() {
        Some(inv) if inv.iter().all(|v| v.is_finite()) => norm1(&m) * norm1(&inv),
        _ => f64::INFINITY,
    }
}

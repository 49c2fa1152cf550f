//! Small dense helpers shared by the objective and solver code.
//!
//! Coefficient matrices are vectorized row by row, i.e. `vec(B')`, so that the
//! block for covariate `j` occupies entries `j*q .. (j+1)*q`.

use nalgebra::{DMatrix, DVector};

/// Stacks the rows of `b` into one vector (`vec(B')`).
pub fn vec_rows(b: &DMatrix<f64>) -> DVector<f64> {
    let (r, c) = b.shape();
    DVector::from_fn(r * c, |k, _| b[(k / c, k % c)])
}

/// Inverse of [`vec_rows`].
pub fn unvec_rows(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), rows * cols, "unvec_rows: length mismatch");
    DMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// `X' diag(w) X` for nonnegative weights.
pub fn weighted_gram(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut xs = x.clone();
    for (i, wi) in w.iter().enumerate() {
        let s = wi.sqrt();
        xs.row_mut(i).scale_mut(s);
    }
    xs.tr_mul(&xs)
}

/// `X' diag(w) Y`.
pub fn weighted_cross(x: &DMatrix<f64>, w: &[f64], y: &DMatrix<f64>) -> DMatrix<f64> {
    let mut ys = y.clone();
    for (i, wi) in w.iter().enumerate() {
        ys.row_mut(i).scale_mut(*wi);
    }
    x.tr_mul(&ys)
}

/// Euclidean norms of the rows of `m`.
pub fn row_norms(m: &DMatrix<f64>) -> Vec<f64> {
    m.row_iter().map(|r| r.norm()).collect()
}

/// Median of a nonempty slice (mean of the two middle values for even length).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(x: &DMatrix<f64>, rel_tol: f64) -> usize {
    if x.nrows() == 0 || x.ncols() == 0 {
        return 0;
    }
    let sv = x.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

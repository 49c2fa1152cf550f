//! Dense data types shared by every estimator.

use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Paired outcome matrix `Y` (n×q) and design matrix `X` (n×(p+1)).
///
/// Column 0 of `X` is the intercept column. Raw data must carry ones there;
/// augmented problems built by [`crate::augment`] relax that check because
/// their pseudo-rows hold zeros in column 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DMatrix<f64>,
    x: DMatrix<f64>,
    intercept_checked: bool,
}

/// Validates `(Y, X)` and wraps it in a [`Dataset`].
///
/// With `intercept_expected` the first design column must be exactly 1 in
/// every row.
pub fn validate_dataset(
    y: DMatrix<f64>,
    x: DMatrix<f64>,
    intercept_expected: bool,
) -> Result<Dataset> {
    if y.nrows() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "Y has {} rows but X has {}",
            y.nrows(),
            x.nrows()
        )));
    }
    if y.nrows() == 0 {
        return Err(Error::DimensionMismatch("no observations".into()));
    }
    if y.ncols() == 0 {
        return Err(Error::DimensionMismatch("Y has no outcome columns".into()));
    }
    if x.ncols() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "X needs an intercept column and at least one covariate, got {} columns",
            x.ncols()
        )));
    }
    check_finite("Y", &y)?;
    check_finite("X", &x)?;
    if intercept_expected {
        if let Some((row, &value)) = x.column(0).iter().enumerate().find(|(_, &v)| v != 1.0) {
            return Err(Error::BadIntercept { row, value });
        }
    }
    Ok(Dataset {
        y,
        x,
        intercept_checked: intercept_expected,
    })
}

fn check_finite(matrix: &'static str, m: &DMatrix<f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite {
                    matrix,
                    row: i,
                    col: j,
                });
            }
        }
    }
    Ok(())
}

impl Dataset {
    /// Raw data: column 0 of `x` must be all ones.
    pub fn new(y: DMatrix<f64>, x: DMatrix<f64>) -> Result<Self> {
        validate_dataset(y, x, true)
    }

    /// Builds a dataset from covariates only, prepending the intercept column.
    pub fn from_covariates(y: DMatrix<f64>, covariates: &DMatrix<f64>) -> Result<Self> {
        let n = covariates.nrows();
        let x = DMatrix::from_fn(n, covariates.ncols() + 1, |i, j| {
            if j == 0 {
                1.0
            } else {
                covariates[(i, j - 1)]
            }
        });
        Self::new(y, x)
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    /// Number of covariates, excluding the intercept.
    pub fn p(&self) -> usize {
        self.x.ncols() - 1
    }

    pub fn q(&self) -> usize {
        self.y.ncols()
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// Whether column 0 was verified to be the ones column.
    pub fn has_checked_intercept(&self) -> bool {
        self.intercept_checked
    }

    /// Rows `idx` of the dataset, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            y: self.y.select_rows(idx),
            x: self.x.select_rows(idx),
            intercept_checked: self.intercept_checked,
        }
    }

    /// Residual matrix `Y - X B`.
    pub fn residuals(&self, b: &CoefMatrix) -> DMatrix<f64> {
        &self.y - &self.x * b.as_matrix()
    }

    /// Fails unless `b` has `p+1` rows and `q` columns.
    pub fn check_coef(&self, b: &CoefMatrix) -> Result<()> {
        if b.nrows() != self.x.ncols() || b.ncols() != self.q() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient matrix is {}x{}, dataset needs {}x{}",
                b.nrows(),
                b.ncols(),
                self.x.ncols(),
                self.q()
            )));
        }
        Ok(())
    }

    /// Unchecked-intercept dataset; used for augmented problems.
    pub(crate) fn from_parts_relaxed(y: DMatrix<f64>, x: DMatrix<f64>) -> Result<Self> {
        validate_dataset(y, x, false)
    }
}

/// Coefficient matrix `B = (β₀, β₁, …, β_p)'`; row 0 is the intercept vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefMatrix(DMatrix<f64>);

impl CoefMatrix {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        check_finite("B", &b)?;
        Ok(Self(b))
    }

    pub fn zeros(p: usize, q: usize) -> Self {
        Self(DMatrix::zeros(p + 1, q))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    /// Number of covariate rows (excluding the intercept).
    pub fn p(&self) -> usize {
        self.0.nrows().saturating_sub(1)
    }

    /// Coefficient vector of row `j` as a column vector.
    pub fn row_vector(&self, j: usize) -> DVector<f64> {
        self.0.row(j).transpose()
    }

    pub fn row_norm(&self, j: usize) -> f64 {
        self.0.row(j).norm()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Scale-relative zero threshold `zero_tau * max(1, ‖B‖∞)`.
    pub fn zero_threshold(&self, zero_tau: f64) -> f64 {
        zero_tau * self.max_abs().max(1.0)
    }
}

/// Penalty indicators and tuning values.
///
/// `gamma[j-1]` flags covariate `j` (1..=p) and `delta[k-1]` flags the
/// difference `β_{k+1} - β_k` (1..=p-1); the intercept is never penalized.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    gamma: Vec<bool>,
    delta: Vec<bool>,
    lambda1: f64,
    lambda2: f64,
    d1: usize,
    d2: usize,
}

impl PenaltySpec {
    pub fn new(gamma: Vec<bool>, delta: Vec<bool>, lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1.is_finite() && lambda1 >= 0.0) {
            return Err(Error::InvalidPenalty(format!("lambda1 must be >= 0, got {lambda1}")));
        }
        if !(lambda2.is_finite() && lambda2 >= 0.0) {
            return Err(Error::InvalidPenalty(format!("lambda2 must be >= 0, got {lambda2}")));
        }
        let p = gamma.len();
        if delta.len() != p.saturating_sub(1) {
            return Err(Error::InvalidPenalty(format!(
                "delta has length {} but p - 1 = {}",
                delta.len(),
                p.saturating_sub(1)
            )));
        }
        let d1 = gamma.iter().filter(|&&g| g).count();
        let d2 = delta.iter().filter(|&&d| d).count();
        Ok(Self {
            gamma,
            delta,
            lambda1,
            lambda2,
            d1,
            d2,
        })
    }

    /// Every covariate and every adjacent difference penalized.
    pub fn all(p: usize, lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::new(vec![true; p], vec![true; p.saturating_sub(1)], lambda1, lambda2)
    }

    /// No penalty at all (plain LAD).
    pub fn none(p: usize) -> Self {
        Self::new(vec![false; p], vec![false; p.saturating_sub(1)], 0.0, 0.0)
            .expect("zero penalty is always valid")
    }

    /// Group LAD-lasso: covariate penalties only.
    pub fn lasso(gamma: Vec<bool>, lambda1: f64) -> Result<Self> {
        let k = gamma.len().saturating_sub(1);
        Self::new(gamma, vec![false; k], lambda1, 0.0)
    }

    /// Same indicators, new tuning values.
    pub fn with_lambdas(&self, lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::new(self.gamma.clone(), self.delta.clone(), lambda1, lambda2)
    }

    pub fn gamma(&self) -> &[bool] {
        &self.gamma
    }

    pub fn delta(&self) -> &[bool] {
        &self.delta
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    /// Fails unless the indicator lengths fit a dataset with `p` covariates.
    pub fn check_p(&self, p: usize) -> Result<()> {
        if self.gamma.len() != p {
            return Err(Error::InvalidPenalty(format!(
                "gamma has length {} but the data has p = {p}",
                self.gamma.len()
            )));
        }
        Ok(())
    }
}

/// Output of every fitting routine.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub b_hat: CoefMatrix,
    /// Penalized objective at `b_hat`, in the original `1/n` normalization.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Covariates `j` in 1..=p with `‖β̂_j‖` above the zero threshold.
    pub active_rows: Vec<usize>,
    /// Partition of 1..=p into maximal fused runs.
    pub fused_groups: Vec<RangeInclusive<usize>>,
    /// `(iteration, objective)` for every accepted iterate.
    pub trace: Vec<(usize, f64)>,
}

impl FitResult {
    /// `false` when the iteration cap was hit; `b_hat` is then the best
    /// iterate seen.
    pub fn is_converged(&self) -> bool {
        self.converged
    }

    /// Group id (0-based) of every covariate 1..=p.
    pub fn group_ids(&self) -> Vec<usize> {
        let p = self.b_hat.p();
        let mut ids = vec![0; p];
        for (g, run) in self.fused_groups.iter().enumerate() {
            for j in run.clone() {
                ids[j - 1] = g;
            }
        }
        ids
    }
}

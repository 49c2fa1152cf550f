//! K-fold cross-validation of `(λ₁, λ₂)` by grid search, and coefficient paths.
//!
//! The CV error of a penalty is the held-out Euclidean residual norm averaged
//! over all `n` observations, with every observation held out exactly once.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CoefMatrix, Dataset, FitResult, PenaltySpec};
use crate::solver::{fit_fused_lad_lasso_from, SolverConfig};

/// Folds and the `(λ₁, λ₂)` grid of a cross-validation run.
#[derive(Debug, Clone, PartialEq)]
pub struct CvPlan {
    k: usize,
    fold_assignment: Vec<usize>,
    seed: u64,
    lambda1_grid: Vec<f64>,
    lambda2_grid: Vec<f64>,
}

/// Assigns `n` observations to `k` folds: a seeded permutation cut into
/// contiguous blocks whose sizes differ by at most one.
pub fn assign_folds(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::InvalidPlan(format!("need 2 <= k <= n, got k = {k}, n = {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (t, &i) in order.iter().enumerate() {
        fold[i] = t * k / n;
    }
    Ok(fold)
}

fn clean_grid(name: &str, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::InvalidPlan(format!("{name} grid is empty")));
    }
    if let Some(v) = grid.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidPlan(format!("{name} grid value {v} is not a finite nonnegative number")));
    }
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

impl CvPlan {
    /// Seeded `k`-fold plan for `n` observations. Grids are sorted and deduplicated.
    pub fn new(n: usize, k: usize, seed: u64, lambda1_grid: &[f64], lambda2_grid: &[f64]) -> Result<Self> {
        let fold_assignment = assign_folds(n, k, seed)?;
        Ok(Self {
            k,
            fold_assignment,
            seed,
            lambda1_grid: clean_grid("lambda1", lambda1_grid)?,
            lambda2_grid: clean_grid("lambda2", lambda2_grid)?,
        })
    }

    /// Plan with an explicit fold label per observation.
    pub fn with_assignment(fold_assignment: Vec<usize>, lambda1_grid: &[f64], lambda2_grid: &[f64]) -> Result<Self> {
        let k = fold_assignment.iter().max().map_or(0, |m| m + 1);
        if k < 2 {
            return Err(Error::InvalidPlan("a fold assignment needs at least two folds".into()));
        }
        for f in 0..k {
            if !fold_assignment.contains(&f) {
                return Err(Error::InvalidPlan(format!("fold {f} is empty")));
            }
        }
        Ok(Self {
            k,
            fold_assignment,
            seed: 0,
            lambda1_grid: clean_grid("lambda1", lambda1_grid)?,
            lambda2_grid: clean_grid("lambda2", lambda2_grid)?,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_assignment(&self) -> &[usize] {
        &self.fold_assignment
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lambda1_grid(&self) -> &[f64] {
        &self.lambda1_grid
    }

    pub fn lambda2_grid(&self) -> &[f64] {
        &self.lambda2_grid
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if self.fold_assignment.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "fold assignment covers {} observations, data has {n}",
                self.fold_assignment.len()
            )));
        }
        Ok(())
    }

    /// `(train, test)` row indices of fold `f`.
    fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.fold_assignment.len()).partition(|&i| self.fold_assignment[i] != f)
    }
}

struct Fold {
    index: usize,
    train: Dataset,
    test: Dataset,
}

fn folds(data: &Dataset, plan: &CvPlan) -> Result<Vec<Fold>> {
    plan.check_n(data.n())?;
    Ok((0..plan.k)
        .map(|f| {
            let (train, test) = plan.split(f);
            Fold {
                index: f,
                train: data.select_rows(&train),
                test: data.select_rows(&test),
            }
        })
        .collect())
}

fn fit_fold(fold: &Fold, pen: &PenaltySpec, init: Option<&CoefMatrix>, cfg: &SolverConfig) -> Result<FitResult> {
    fit_fused_lad_lasso_from(&fold.train, pen, init, cfg).map_err(|e| match e {
        Error::RankDeficient { cols, .. } if fold.train.n() < cols => Error::FoldTooSmall {
            fold: fold.index,
            train_rows: fold.train.n(),
            cols,
        },
        e => e,
    })
}

/// Sum of held-out residual norms.
fn held_out_sum(test: &Dataset, b: &CoefMatrix) -> f64 {
    test.residuals(b).row_iter().map(|r| r.norm()).sum()
}

/// Cross-validation error of one penalty.
pub fn cv_error(data: &Dataset, pen: &PenaltySpec, plan: &CvPlan, cfg: &SolverConfig) -> Result<f64> {
    pen.check_p(data.p())?;
    let mut total = 0.0;
    for fold in folds(data, plan)? {
        let fit = fit_fold(&fold, pen, None, cfg)?;
        total += held_out_sum(&fold.test, &fit.b_hat);
    }
    Ok(total / data.n() as f64)
}

/// A grid point whose CV error could not be computed.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFailure {
    pub lambda1: f64,
    pub lambda2: f64,
    pub fold: usize,
    pub message: String,
}

/// Cross-validation errors over the full grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSurface {
    pub lambda1_grid: Vec<f64>,
    pub lambda2_grid: Vec<f64>,
    /// `errors[(i, j)]` is the CV error at `(λ₁ᵢ, λ₂ⱼ)`; NaN where it failed.
    pub errors: DMatrix<f64>,
    /// Mean held-out residual norm of each fold, one matrix per fold.
    pub per_fold: Vec<DMatrix<f64>>,
    pub best: (f64, f64),
    pub best_index: (usize, usize),
    pub failures: Vec<GridFailure>,
    /// Grid points where at least one fold fit hit `max_iter`.
    pub not_converged: usize,
}

impl CvSurface {
    /// `(λ₁, λ₂, error)` in row-major grid order.
    pub fn rows(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.errors.len());
        for (i, &l1) in self.lambda1_grid.iter().enumerate() {
            for (j, &l2) in self.lambda2_grid.iter().enumerate() {
                out.push((l1, l2, self.errors[(i, j)]));
            }
        }
        out
    }

    pub fn best_error(&self) -> f64 {
        self.errors[self.best_index]
    }
}

struct Row {
    errors: Vec<f64>,
    per_fold: Vec<Vec<f64>>,
    failures: Vec<GridFailure>,
    not_converged: usize,
}

/// One λ₁ row of the surface, warm starting each fold along increasing λ₂.
fn surface_row(folds: &[Fold], base: &PenaltySpec, l1: f64, grid2: &[f64], cfg: &SolverConfig, n: usize) -> Row {
    let m = grid2.len();
    let mut row = Row {
        errors: vec![0.0; m],
        per_fold: vec![vec![f64::NAN; m]; folds.len()],
        failures: Vec::new(),
        not_converged: 0,
    };
    let mut unconverged = vec![false; m];
    for fold in folds {
        let mut warm: Option<CoefMatrix> = None;
        for (j, &l2) in grid2.iter().enumerate() {
            let fit = base
                .with_lambdas(l1, l2)
                .and_then(|pen| fit_fold(fold, &pen, warm.as_ref(), cfg));
            match fit {
                Ok(fit) => {
                    let s = held_out_sum(&fold.test, &fit.b_hat);
                    row.errors[j] += s;
                    row.per_fold[fold.index][j] = s / fold.test.n() as f64;
                    unconverged[j] |= !fit.converged;
                    warm = Some(fit.b_hat);
                }
                Err(e) => {
                    row.errors[j] = f64::NAN;
                    row.failures.push(GridFailure {
                        lambda1: l1,
                        lambda2: l2,
                        fold: fold.index,
                        message: e.to_string(),
                    });
                }
            }
        }
    }
    for e in &mut row.errors {
        *e /= n as f64;
    }
    row.not_converged = unconverged.iter().filter(|&&u| u).count();
    row
}

/// Evaluates [`cv_error`] on every grid point. Rows of the grid run in
/// parallel; within a row each fold is warm started along increasing `λ₂`.
/// The minimum breaks ties toward larger `(λ₁, λ₂)` in lexicographic order.
pub fn grid_search(
    data: &Dataset,
    gamma: &[bool],
    delta: &[bool],
    plan: &CvPlan,
    cfg: &SolverConfig,
) -> Result<CvSurface> {
    cfg.validate()?;
    let base = PenaltySpec::new(gamma.to_vec(), delta.to_vec(), 0.0, 0.0)?;
    base.check_p(data.p())?;
    let folds = folds(data, plan)?;
    let (g1, g2) = (&plan.lambda1_grid, &plan.lambda2_grid);

    let rows: Vec<Row> = g1
        .par_iter()
        .map(|&l1| surface_row(&folds, &base, l1, g2, cfg, data.n()))
        .collect();

    let errors = DMatrix::from_fn(g1.len(), g2.len(), |i, j| rows[i].errors[j]);
    let per_fold = (0..plan.k)
        .map(|f| DMatrix::from_fn(g1.len(), g2.len(), |i, j| rows[i].per_fold[f][j]))
        .collect();
    let not_converged = rows.iter().map(|r| r.not_converged).sum();
    let failures: Vec<GridFailure> = rows.into_iter().flat_map(|r| r.failures).collect();

    let mut best: Option<(usize, usize)> = None;
    for i in 0..g1.len() {
        for j in 0..g2.len() {
            let e = errors[(i, j)];
            if e.is_nan() {
                continue;
            }
            // Later indices are larger λ's, so `<=` breaks ties upward.
            if best.is_none_or(|b| e <= errors[b]) {
                best = Some((i, j));
            }
        }
    }
    let Some(best_index) = best else {
        let f = &failures[0];
        return Err(Error::InvalidPlan(format!(
            "every grid point failed; first failure at ({}, {}) fold {}: {}",
            f.lambda1, f.lambda2, f.fold, f.message
        )));
    };

    Ok(CvSurface {
        lambda1_grid: g1.clone(),
        lambda2_grid: g2.clone(),
        errors,
        per_fold,
        best: (g1[best_index.0], g2[best_index.1]),
        best_index,
        failures,
        not_converged,
    })
}

/// Which tuning parameter a coefficient path sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathAxis {
    Lambda1,
    Lambda2,
}

/// Fits along a sweep of one tuning parameter with the other held at its value
/// in `pen`. The values are visited in increasing order with warm starts and
/// returned in that order.
pub fn coefficient_path(
    data: &Dataset,
    pen: &PenaltySpec,
    axis: PathAxis,
    values: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<(f64, FitResult)>> {
    let values = clean_grid("path", values)?;
    let mut out: Vec<(f64, FitResult)> = Vec::with_capacity(values.len());
    for v in values {
        let p = match axis {
            PathAxis::Lambda1 => pen.with_lambdas(v, pen.lambda2())?,
            PathAxis::Lambda2 => pen.with_lambdas(pen.lambda1(), v)?,
        };
        let init = out.last().map(|(_, f)| &f.b_hat);
        let fit = fit_fused_lad_lasso_from(data, &p, init, cfg)?;
        out.push((v, fit));
    }
    Ok(out)
}

/// Spacing of a generated λ grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScale {
    Linear,
    Log,
}

/// `count` values from `start` to `stop` inclusive.
pub fn lambda_grid(start: f64, stop: f64, count: usize, scale: GridScale) -> Result<Vec<f64>> {
    if count == 0 || !(start.is_finite() && stop.is_finite()) || start < 0.0 || stop < start {
        return Err(Error::InvalidPlan(format!("bad grid {start}:{stop}:{count}")));
    }
    if scale == GridScale::Log && start <= 0.0 {
        return Err(Error::InvalidPlan("a log grid must start above zero".into()));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let t = |i: usize| i as f64 / (count - 1) as f64;
    Ok((0..count)
        .map(|i| match scale {
            _ if i == count - 1 => stop,
            GridScale::Linear => start + (stop - start) * t(i),
            GridScale::Log => (start.ln() + (stop.ln() - start.ln()) * t(i)).exp(),
        })
        .collect())
}

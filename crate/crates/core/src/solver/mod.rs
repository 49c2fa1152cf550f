//! Fitting routines for LAD, group LAD-lasso and fused group LAD-lasso.
//!
//! Every penalized fit goes through [`crate::augment`] and one multivariate
//! LAD minimization. Reported objectives are always in the original `1/n`
//! normalization of the penalized criterion.

mod engine;
mod structure;

pub use structure::extract_structure;

use nalgebra::DMatrix;

use crate::augment::augment_fused;
use crate::error::{Error, Result};
use crate::model::{CoefMatrix, Dataset, FitResult, PenaltySpec};
use crate::objective::{fused_ladlasso_objective, fused_lasso_objective_sq};
use engine::{Loss, Problem};

/// Solver tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Without Newton steps, a smoothing stage ends once the relative
    /// decrease of the surrogate falls below this.
    pub tol_rel: f64,
    /// Final smoothing width of the norm terms, relative to the median
    /// residual norm at the start. The smoothed optimum is within about this
    /// width (times the mean row weight) of the true optimum.
    pub eps_smooth: f64,
    /// Zero threshold for reporting sparsity and fusion, relative to
    /// `max(1, ‖B̂‖∞)`.
    pub zero_tau: f64,
    /// Newton steps on the smoothed objective and the polish on the exact
    /// objective. Without it only reweighted least squares steps are taken.
    pub newton_refine: bool,
    /// Reserved for randomized tie-breaking; the solver itself is
    /// deterministic.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol_rel: 1e-8,
            eps_smooth: 1e-8,
            zero_tau: 1e-6,
            newton_refine: true,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        for (name, v) in [
            ("tol_rel", self.tol_rel),
            ("eps_smooth", self.eps_smooth),
            ("zero_tau", self.zero_tau),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Result of a LAD fit on an arbitrary design (no intercept assumptions).
#[derive(Debug, Clone)]
pub struct DesignFit {
    pub b: DMatrix<f64>,
    /// `(1/m) Σ ‖yᵢ − B'xᵢ‖` over the `m` rows.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<(usize, f64)>,
}

/// Minimizes `(1/m) Σ ‖yᵢ − B'xᵢ‖` for any full-column-rank design, including
/// intercept-only designs and augmented problems.
pub fn fit_lad_design(
    y: &DMatrix<f64>,
    x: &DMatrix<f64>,
    init: Option<&DMatrix<f64>>,
    cfg: &SolverConfig,
) -> Result<DesignFit> {
    cfg.validate()?;
    if y.nrows() != x.nrows() || y.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "Y has {} rows and X has {}",
            y.nrows(),
            x.nrows()
        )));
    }
    let prob = Problem::all_norm(y, x, 1.0 / y.nrows() as f64);
    let sol = engine::minimize(&prob, init, cfg)?;
    Ok(DesignFit {
        b: sol.b,
        objective: sol.objective,
        iterations: sol.iterations,
        converged: sol.converged,
        trace: sol.trace,
    })
}

/// Plain multivariate LAD regression.
pub fn fit_lad(data: &Dataset, cfg: &SolverConfig) -> Result<FitResult> {
    fit_fused_lad_lasso(data, &PenaltySpec::none(data.p()), cfg)
}

/// Group LAD-lasso: `(1/n)Σ‖yᵢ − B'xᵢ‖ + λ₁Σγⱼ‖βⱼ‖`.
pub fn fit_lad_lasso(
    data: &Dataset,
    gamma: &[bool],
    lambda1: f64,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    fit_fused_lad_lasso(data, &PenaltySpec::lasso(gamma.to_vec(), lambda1)?, cfg)
}

/// Fused group LAD-lasso.
pub fn fit_fused_lad_lasso(data: &Dataset, pen: &PenaltySpec, cfg: &SolverConfig) -> Result<FitResult> {
    fit_fused_lad_lasso_from(data, pen, None, cfg)
}

/// [`fit_fused_lad_lasso`] started from `init` instead of the least squares
/// fit of the augmented problem.
pub fn fit_fused_lad_lasso_from(
    data: &Dataset,
    pen: &PenaltySpec,
    init: Option<&CoefMatrix>,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    if let Some(b) = init {
        data.check_coef(b)?;
    }
    let aug = augment_fused(data, pen)?;
    let fit = fit_lad_design(&aug.ystar, &aug.xstar, init.map(|b| b.as_matrix()), cfg)?;
    let b_hat = CoefMatrix::new(fit.b)?;
    let trace = fit.trace.iter().map(|&(k, v)| (k, v / aug.scale)).collect();
    let objective = fused_ladlasso_objective(data, &b_hat, pen);
    Ok(finish(b_hat, objective, fit.iterations, fit.converged, trace, pen, cfg))
}

/// Squared-loss counterpart `(1/n)Σ‖yᵢ − B'xᵢ‖² + λ₁ g(B) + λ₂ h(B)`, solved
/// by the same engine with the data rows switched to squared loss.
pub fn fit_fused_lasso_sq(data: &Dataset, pen: &PenaltySpec, cfg: &SolverConfig) -> Result<FitResult> {
    cfg.validate()?;
    let aug = augment_fused(data, pen)?;
    let n = data.n();
    let m = aug.rows();
    let loss = (0..m).map(|i| if i < n { Loss::Squared } else { Loss::Norm }).collect();
    let prob = Problem {
        y: &aug.ystar,
        x: &aug.xstar,
        weight: vec![1.0 / n as f64; m],
        loss,
    };
    let sol = engine::minimize(&prob, None, cfg)?;
    let b_hat = CoefMatrix::new(sol.b)?;
    let objective = fused_lasso_objective_sq(data, &b_hat, pen);
    Ok(finish(b_hat, objective, sol.iterations, sol.converged, sol.trace, pen, cfg))
}

/// Ordinary least squares `(X'X)⁻¹X'Y` (ridge-floored when nearly singular).
pub fn fit_ols(data: &Dataset) -> Result<CoefMatrix> {
    let fit = fit_fused_lasso_sq(data, &PenaltySpec::none(data.p()), &SolverConfig::default())?;
    Ok(fit.b_hat)
}

fn finish(
    b_hat: CoefMatrix,
    objective: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<(usize, f64)>,
    pen: &PenaltySpec,
    cfg: &SolverConfig,
) -> FitResult {
    let (active_rows, fused_groups) = extract_structure(&b_hat, pen, cfg.zero_tau);
    FitResult {
        b_hat,
        objective,
        iterations,
        converged,
        active_rows,
        fused_groups,
        trace,
    }
}

//! Multi-outcome least-absolute-deviation regression with group lasso and
//! group fusion penalties.
//!
//! The penalized estimators are solved by rewriting every penalty term as a
//! pseudo-observation ([`augment`]) and minimizing the resulting plain
//! multivariate LAD criterion ([`solver`]). [`objective`] holds the analytic
//! objectives and derivatives, [`tuning`] the cross-validated choice of the
//! two tuning parameters, and [`simulate`] a seeded generator for correlated
//! covariate blocks.

pub mod augment;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod model;
pub mod objective;
pub mod simulate;
pub mod solver;
pub mod tuning;

pub use error::{Error, Result};
pub use model::{validate_dataset, CoefMatrix, Dataset, FitResult, PenaltySpec};
pub use solver::{
    extract_structure, fit_fused_lad_lasso, fit_fused_lasso_sq, fit_lad, fit_lad_lasso,
    SolverConfig,
};

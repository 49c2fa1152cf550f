//! Rewriting the group and fusion penalties as pseudo-observations.
//!
//! A penalty term `λ‖a'B‖` equals `(1/n)‖0_q − B'(nλa)‖`, so appending the
//! row `(0_q', nλa')` to `(Y, X)` turns the penalized criterion into a plain
//! LAD criterion on `n + d₁ + d₂` rows, scaled by `n/(n + d₁ + d₂)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{CoefMatrix, Dataset, PenaltySpec};
use crate::objective::{difference_matrix, lad_objective};

/// Stacked problem `Y* = (Y; 0)`, `X* = (X; nλ₁A₁; nλ₂A₂W)`.
#[derive(Debug, Clone)]
pub struct AugmentedProblem {
    pub ystar: DMatrix<f64>,
    pub xstar: DMatrix<f64>,
    pub n: usize,
    pub d1: usize,
    pub d2: usize,
    /// `n / (n + d₁ + d₂)`.
    pub scale: f64,
    pub source_pen: PenaltySpec,
}

impl AugmentedProblem {
    pub fn rows(&self) -> usize {
        self.ystar.nrows()
    }

    /// The stacked matrices as a dataset (column 0 is not checked).
    pub fn as_dataset(&self) -> Dataset {
        Dataset::from_parts_relaxed(self.ystar.clone(), self.xstar.clone())
            .expect("augmented rows are finite and shapes agree")
    }

    /// `(1/(n+d₁+d₂)) Σ ‖y*ᵢ − B'x*ᵢ‖`.
    pub fn mean_lad_objective(&self, b: &CoefMatrix) -> f64 {
        lad_objective(&self.as_dataset(), b) / self.rows() as f64
    }
}

/// Group LAD-lasso augmentation. With `λ₁ = 0` no rows are added.
pub fn augment_ladlasso(data: &Dataset, gamma: &[bool], lambda1: f64) -> Result<AugmentedProblem> {
    let pen = PenaltySpec::lasso(gamma.to_vec(), lambda1)?;
    augment_fused(data, &pen)
}

/// Fused group LAD-lasso augmentation. Penalties whose λ is zero add no rows.
pub fn augment_fused(data: &Dataset, pen: &PenaltySpec) -> Result<AugmentedProblem> {
    pen.check_p(data.p())?;
    let n = data.n();
    let p = data.p();
    let q = data.q();
    if pen.lambda2() > 0.0 && pen.d2() > 0 && p < 2 {
        return Err(Error::DegenerateP { p });
    }

    let nf = n as f64;
    let mut penalty_rows: Vec<Vec<f64>> = Vec::new();
    let mut d1 = 0;
    if pen.lambda1() > 0.0 {
        let s = nf * pen.lambda1();
        for j in 1..=p {
            if pen.gamma()[j - 1] {
                let mut row = vec![0.0; p + 1];
                row[j] = s;
                penalty_rows.push(row);
                d1 += 1;
            }
        }
    }
    let mut d2 = 0;
    if pen.lambda2() > 0.0 && p >= 2 {
        let s = nf * pen.lambda2();
        let w = difference_matrix(p);
        for k in 0..p - 1 {
            if pen.delta()[k] {
                penalty_rows.push(w.row(k).iter().map(|v| s * v).collect());
                d2 += 1;
            }
        }
    }

    let m = n + penalty_rows.len();
    let mut xstar = DMatrix::zeros(m, p + 1);
    xstar.rows_mut(0, n).copy_from(data.x());
    for (r, row) in penalty_rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            xstar[(n + r, j)] = *v;
        }
    }
    let mut ystar = DMatrix::zeros(m, q);
    ystar.rows_mut(0, n).copy_from(data.y());

    Ok(AugmentedProblem {
        ystar,
        xstar,
        n,
        d1,
        d2,
        scale: nf / m as f64,
        source_pen: pen.clone(),
    })
}

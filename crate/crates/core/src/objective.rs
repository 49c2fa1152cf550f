//! Objective functions and their analytic derivatives.
//!
//! Derivatives with respect to the vectorized coefficients use the row-major
//! layout `β = vec(B') = (β₀', β₁', …, β_p')'` (see [`crate::linalg`]).

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::linalg::{median, row_norms};
use crate::model::{CoefMatrix, Dataset, PenaltySpec};

/// Spatial sign `v/‖v‖`, or the zero vector when `v = 0`.
pub fn spatial_sign(v: &DVector<f64>) -> DVector<f64> {
    let norm = v.norm();
    if norm == 0.0 {
        DVector::zeros(v.len())
    } else {
        v / norm
    }
}

/// Matrix whose rows are the spatial signs of the rows of another matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSignMatrix {
    pub u: DMatrix<f64>,
}

impl SpatialSignMatrix {
    /// `U(M)`: row `i` is `u(m_i)'`. Rows with norm at most `zero_below` map to
    /// the zero row.
    pub fn of_rows(m: &DMatrix<f64>, zero_below: f64) -> Self {
        let mut u = m.clone();
        for mut row in u.row_iter_mut() {
            let norm = row.norm();
            if norm <= zero_below || norm == 0.0 {
                row.fill(0.0);
            } else {
                row /= norm;
            }
        }
        Self { u }
    }

    /// Indices of rows set to zero.
    pub fn zero_rows(&self) -> Vec<usize> {
        self.u
            .row_iter()
            .enumerate()
            .filter(|(_, r)| r.iter().all(|&v| v == 0.0))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Difference and selection matrices of the fused penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedStructure {
    /// (p−1)×(p+1) first differences; `(W B)` row k is `(β_{k+1} − β_k)'`.
    pub w: DMatrix<f64>,
    /// d₁×(p+1) selector of penalized covariate rows.
    pub a1: DMatrix<f64>,
    /// d₂×(p−1) selector of penalized rows of `w`.
    pub a2: DMatrix<f64>,
    /// (p+1)×p adjoint `[0'; D] − [D; 0']` used by the fusion gradient.
    pub a: DMatrix<f64>,
    /// p×p `diag(0, δ₁, …, δ_{p−1})`.
    pub d: DMatrix<f64>,
}

impl FusedStructure {
    pub fn new(pen: &PenaltySpec) -> Self {
        let p = pen.p();
        let w = difference_matrix(p);
        let penalized_cov: Vec<usize> = (1..=p).filter(|&j| pen.gamma()[j - 1]).collect();
        let mut a1 = DMatrix::zeros(penalized_cov.len(), p + 1);
        for (r, &j) in penalized_cov.iter().enumerate() {
            a1[(r, j)] = 1.0;
        }
        let penalized_diff: Vec<usize> = (0..p.saturating_sub(1)).filter(|&k| pen.delta()[k]).collect();
        let mut a2 = DMatrix::zeros(penalized_diff.len(), p.saturating_sub(1));
        for (r, &k) in penalized_diff.iter().enumerate() {
            a2[(r, k)] = 1.0;
        }
        let mut d = DMatrix::zeros(p, p);
        for k in 1..p {
            d[(k, k)] = if pen.delta()[k - 1] { 1.0 } else { 0.0 };
        }
        let mut a = DMatrix::zeros(p + 1, p);
        for s in 0..=p {
            for c in 0..p {
                let upper = if s >= 1 { d[(s - 1, c)] } else { 0.0 };
                let lower = if s < p { d[(s, c)] } else { 0.0 };
                a[(s, c)] = upper - lower;
            }
        }
        Self { w, a1, a2, a, d }
    }

    /// The p×(p+1) variant `[0 I_p] − [I_p 0]` whose extra leading row is the
    /// intercept difference `β₁ − β₀`, switched off by the zero in `D`.
    pub fn w_with_intercept_row(p: usize) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(p, p + 1);
        for k in 0..p {
            w[(k, k)] = -1.0;
            w[(k, k + 1)] = 1.0;
        }
        w
    }
}

/// The (p−1)×(p+1) difference operator with a zero intercept column.
pub fn difference_matrix(p: usize) -> DMatrix<f64> {
    let rows = p.saturating_sub(1);
    let mut w = DMatrix::zeros(rows, p + 1);
    for k in 0..rows {
        w[(k, k + 1)] = -1.0;
        w[(k, k + 2)] = 1.0;
    }
    w
}

fn assert_compatible(data: &Dataset, b: &CoefMatrix) {
    assert!(
        b.nrows() == data.x().ncols() && b.ncols() == data.q(),
        "coefficient matrix {}x{} does not fit data with {} columns and q = {}",
        b.nrows(),
        b.ncols(),
        data.x().ncols(),
        data.q()
    );
}

/// Residual-norm threshold below which a row is treated as a kink.
pub fn singular_threshold(residual_norms: &[f64]) -> f64 {
    1e-10 * (1.0 + median(residual_norms))
}

/// `w(B) = Σᵢ ‖yᵢ − B'xᵢ‖` (no `1/n`).
pub fn lad_objective(data: &Dataset, b: &CoefMatrix) -> f64 {
    assert_compatible(data, b);
    row_norms(&data.residuals(b)).iter().sum()
}

/// A gradient together with the rows where the zero subgradient was chosen.
#[derive(Debug, Clone)]
pub struct Subgradient {
    pub matrix: DMatrix<f64>,
    /// Observations with a (near-)zero residual; they contribute nothing.
    pub zero_rows: Vec<usize>,
}

impl Subgradient {
    pub fn is_ambiguous(&self) -> bool {
        !self.zero_rows.is_empty()
    }
}

/// `∂w/∂B = −X'U` where row i of `U` is the spatial sign of the residual.
pub fn lad_gradient(data: &Dataset, b: &CoefMatrix) -> Subgradient {
    assert_compatible(data, b);
    let r = data.residuals(b);
    let norms = row_norms(&r);
    let eps = singular_threshold(&norms);
    let u = SpatialSignMatrix::of_rows(&r, eps);
    Subgradient {
        matrix: -data.x().tr_mul(&u.u),
        zero_rows: (0..norms.len()).filter(|&i| norms[i] <= eps).collect(),
    }
}

/// Hessian of `w` with respect to `vec(B')`, plus the rows that were skipped.
#[derive(Debug, Clone)]
pub struct LadHessian {
    pub matrix: DMatrix<f64>,
    pub skipped_rows: Vec<usize>,
}

/// `H = Σᵢ ‖rᵢ‖⁻¹ (xᵢxᵢ') ⊗ (I_q − uᵢuᵢ')`.
///
/// This is the negated form `−Σ ‖rᵢ‖⁻¹ (xᵢxᵢ') ⊗ (uᵢuᵢ' − I_q)`, i.e. the same
/// matrix written in its positive semidefinite orientation.
pub fn lad_hessian(data: &Dataset, b: &CoefMatrix) -> LadHessian {
    assert_compatible(data, b);
    let r = data.residuals(b);
    let norms = row_norms(&r);
    let eps = singular_threshold(&norms);
    let c = data.x().ncols();
    let q = data.q();
    let mut h = DMatrix::zeros(c * q, c * q);
    let mut skipped = Vec::new();
    for i in 0..data.n() {
        let t = norms[i];
        if t <= eps {
            skipped.push(i);
            continue;
        }
        let x = data.x().row(i);
        let u = r.row(i) / t;
        let mut proj = DMatrix::<f64>::identity(q, q);
        proj -= u.transpose() * &u;
        for j in 0..c {
            for jj in 0..c {
                let xx = x[j] * x[jj] / t;
                if xx == 0.0 {
                    continue;
                }
                for l in 0..q {
                    for ll in 0..q {
                        h[(j * q + l, jj * q + ll)] += xx * proj[(l, ll)];
                    }
                }
            }
        }
    }
    LadHessian {
        matrix: h,
        skipped_rows: skipped,
    }
}

/// `g(B) = Σⱼ γⱼ‖βⱼ‖` over covariate rows 1..=p.
pub fn group_penalty(b: &CoefMatrix, gamma: &[bool]) -> f64 {
    assert_eq!(gamma.len(), b.p(), "gamma length must equal p");
    gamma
        .iter()
        .enumerate()
        .filter(|(_, &g)| g)
        .map(|(j, _)| b.row_norm(j + 1))
        .sum()
}

/// `h(B) = Σ_k δ_k‖β_{k+1} − β_k‖` over k = 1..p−1.
pub fn fusion_penalty(b: &CoefMatrix, delta: &[bool]) -> f64 {
    let p = b.p();
    if p < 2 {
        warn!("fusion penalty requested with p = {p}; it is identically zero");
        return 0.0;
    }
    assert_eq!(delta.len(), p - 1, "delta length must equal p - 1");
    let m = b.as_matrix();
    (1..p)
        .filter(|&k| delta[k - 1])
        .map(|k| (m.row(k + 1) - m.row(k)).norm())
        .sum()
}

/// `(1/n) w(B) + λ₁ g(B) + λ₂ h(B)`.
pub fn fused_ladlasso_objective(data: &Dataset, b: &CoefMatrix, pen: &PenaltySpec) -> f64 {
    let mut value = lad_objective(data, b) / data.n() as f64;
    if pen.lambda1() > 0.0 {
        value += pen.lambda1() * group_penalty(b, pen.gamma());
    }
    if pen.lambda2() > 0.0 {
        value += pen.lambda2() * fusion_penalty(b, pen.delta());
    }
    value
}

/// `v(B) = (1/n) Σᵢ ‖yᵢ − B'xᵢ‖² + λ₁ g(B) + λ₂ h(B)`.
pub fn fused_lasso_objective_sq(data: &Dataset, b: &CoefMatrix, pen: &PenaltySpec) -> f64 {
    assert_compatible(data, b);
    let mut value = data.residuals(b).norm_squared() / data.n() as f64;
    if pen.lambda1() > 0.0 {
        value += pen.lambda1() * group_penalty(b, pen.gamma());
    }
    if pen.lambda2() > 0.0 {
        value += pen.lambda2() * fusion_penalty(b, pen.delta());
    }
    value
}

/// Subgradient of the squared-loss fused objective.
#[derive(Debug, Clone)]
pub struct FusedSubgradient {
    pub matrix: DMatrix<f64>,
    /// Penalized covariate rows with `β_j = 0`.
    pub zero_coef_rows: Vec<usize>,
    /// Penalized differences `k` with `β_{k+1} = β_k`.
    pub zero_diff_rows: Vec<usize>,
}

/// `∂v/∂B = −(2/n)(X'Y − X'XB) + λ₁ diag(γ) U(B) + λ₂ A U(W B)`, with `W` the
/// p×(p+1) variant that includes the inert intercept difference.
pub fn fused_lasso_gradient_sq(data: &Dataset, b: &CoefMatrix, pen: &PenaltySpec) -> FusedSubgradient {
    assert_compatible(data, b);
    let n = data.n() as f64;
    let p = data.p();
    let bm = b.as_matrix();
    let x = data.x();
    let mut grad = -(2.0 / n) * (x.tr_mul(data.y()) - x.tr_mul(x) * bm);

    let mut zero_coef_rows = Vec::new();
    let mut zero_diff_rows = Vec::new();

    let u_b = SpatialSignMatrix::of_rows(bm, 0.0);
    let mut diag_gamma = DMatrix::zeros(p + 1, p + 1);
    for j in 1..=p {
        if pen.gamma()[j - 1] {
            diag_gamma[(j, j)] = 1.0;
            if bm.row(j).norm() == 0.0 {
                zero_coef_rows.push(j);
            }
        }
    }
    if pen.lambda1() > 0.0 {
        grad += pen.lambda1() * &diag_gamma * &u_b.u;
    }

    if p >= 2 {
        let fs = FusedStructure::new(pen);
        let w_full = FusedStructure::w_with_intercept_row(p);
        let wb = &w_full * bm;
        let u_wb = SpatialSignMatrix::of_rows(&wb, 0.0);
        for k in 1..p {
            if pen.delta()[k - 1] && wb.row(k).norm() == 0.0 {
                zero_diff_rows.push(k);
            }
        }
        if pen.lambda2() > 0.0 {
            grad += pen.lambda2() * &fs.a * &u_wb.u;
        }
    }

    FusedSubgradient {
        matrix: grad,
        zero_coef_rows,
        zero_diff_rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, vec_rows};
    use crate::model::validate_dataset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(rng: &mut ChaCha8Rng, n: usize, p: usize, q: usize) -> Dataset {
        let x = DMatrix::from_fn(n, p + 1, |_, j| if j == 0 { 1.0 } else { rng.random_range(-2.0..2.0) });
        let y = DMatrix::from_fn(n, q, |_, _| rng.random_range(-3.0..3.0));
        validate_dataset(y, x, true).unwrap()
    }

    fn random_coef(rng: &mut ChaCha8Rng, p: usize, q: usize) -> CoefMatrix {
        CoefMatrix::new(DMatrix::from_fn(p + 1, q, |_, _| rng.random_range(-1.5..1.5))).unwrap()
    }

    #[test]
    fn spatial_sign_cases() {
        assert_eq!(spatial_sign(&DVector::from_row_slice(&[0.0, 0.0])), DVector::zeros(2));
        let s = spatial_sign(&DVector::from_row_slice(&[3.0, 4.0]));
        assert!((s[0] - 0.6).abs() < 1e-15 && (s[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn lad_objective_at_zero_and_exact_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = random_data(&mut rng, 6, 2, 2);
        let zero = CoefMatrix::zeros(2, 2);
        let expected: f64 = data.y().row_iter().map(|r| r.norm()).sum();
        assert!((lad_objective(&data, &zero) - expected).abs() < 1e-12);

        let b0 = random_coef(&mut rng, 2, 2);
        let exact = validate_dataset(data.x() * b0.as_matrix(), data.x().clone(), true).unwrap();
        assert!(lad_objective(&exact, &b0) < 1e-12);
        let g = lad_gradient(&exact, &b0);
        assert_eq!(g.matrix, DMatrix::zeros(3, 2));
        assert_eq!(g.zero_rows.len(), 6);
    }

    #[test]
    fn lad_objective_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = random_data(&mut rng, 5, 1, 2);
        let b = random_coef(&mut rng, 1, 2);
        let mut oracle = 0.0;
        for i in 0..5 {
            let mut s = 0.0;
            for l in 0..2 {
                let mut fit = 0.0;
                for j in 0..2 {
                    fit += data.x()[(i, j)] * b.as_matrix()[(j, l)];
                }
                s += (data.y()[(i, l)] - fit).powi(2);
            }
            oracle += s.sqrt();
        }
        assert!((lad_objective(&data, &b) - oracle).abs() < 1e-12);
    }

    #[test]
    fn univariate_gradient_all_positive_residuals() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, 1.0, 1.5, 1.0, -1.0]);
        let y = DMatrix::from_row_slice(3, 1, &[10.0, 11.0, 12.0]);
        let data = validate_dataset(y, x.clone(), true).unwrap();
        let g = lad_gradient(&data, &CoefMatrix::zeros(1, 1));
        let expected = -x.tr_mul(&DMatrix::from_element(3, 1, 1.0));
        assert!((g.matrix - expected).norm() < 1e-15);
    }

    #[test]
    fn univariate_hessian_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = random_data(&mut rng, 8, 3, 1);
        let h = lad_hessian(&data, &random_coef(&mut rng, 3, 1));
        assert!(h.matrix.amax() < 1e-14);
    }

    #[test]
    fn single_observation_hessian_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = random_data(&mut rng, 1, 2, 2);
        let h = lad_hessian(&data, &random_coef(&mut rng, 2, 2)).matrix;
        let eig = h.symmetric_eigen().eigenvalues;
        let scale = eig.amax();
        let rank = eig.iter().filter(|&&e| e.abs() > 1e-10 * scale).count();
        assert!(rank <= 3, "rank {rank}");
    }

    #[test]
    fn group_penalty_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = random_coef(&mut rng, 4, 3);
        assert_eq!(group_penalty(&CoefMatrix::zeros(4, 3), &[true; 4]), 0.0);
        assert_eq!(group_penalty(&b, &[false; 4]), 0.0);
        let mut oracle = 0.0;
        for j in 1..=4 {
            let mut s = 0.0;
            for l in 0..3 {
                s += b.as_matrix()[(j, l)].powi(2);
            }
            oracle += s.sqrt();
        }
        assert!((group_penalty(&b, &[true; 4]) - oracle).abs() < 1e-12);
    }

    #[test]
    fn fusion_penalty_cases() {
        let constant = CoefMatrix::new(DMatrix::from_fn(4, 2, |_, l| l as f64 + 0.5)).unwrap();
        assert_eq!(fusion_penalty(&constant, &[true, true]), 0.0);

        let b = CoefMatrix::new(DMatrix::from_row_slice(3, 2, &[9.0, 9.0, 1.0, 1.0, 4.0, 5.0])).unwrap();
        assert!((fusion_penalty(&b, &[true]) - 5.0).abs() < 1e-15);

        let p1 = CoefMatrix::new(DMatrix::from_row_slice(2, 1, &[1.0, 2.0])).unwrap();
        assert_eq!(fusion_penalty(&p1, &[]), 0.0);
    }

    #[test]
    fn fusion_penalty_matches_w_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let b = random_coef(&mut rng, 5, 2);
        let delta = [true, false, true, true];
        let pen = PenaltySpec::new(vec![true; 5], delta.to_vec(), 1.0, 1.0).unwrap();
        let fs = FusedStructure::new(&pen);
        let wb = &fs.w * b.as_matrix();
        let oracle: f64 = (0..4).filter(|&k| delta[k]).map(|k| wb.row(k).norm()).sum();
        assert!((fusion_penalty(&b, &delta) - oracle).abs() < 1e-12);

        // A2 W selects exactly the penalized differences.
        let selected = &fs.a2 * &wb;
        let via_a2: f64 = selected.row_iter().map(|r| r.norm()).sum();
        assert!((via_a2 - oracle).abs() < 1e-12);

        // The (p)x(p+1) variant weighted by D gives the same penalty.
        let wfull = FusedStructure::w_with_intercept_row(5) * b.as_matrix();
        let via_d: f64 = (0..5).map(|k| fs.d[(k, k)] * wfull.row(k).norm()).sum();
        assert!((via_d - oracle).abs() < 1e-12);
    }

    #[test]
    fn fused_structure_shapes() {
        let pen = PenaltySpec::new(vec![true, false, true], vec![true, false], 1.0, 1.0).unwrap();
        let fs = FusedStructure::new(&pen);
        assert_eq!(fs.w.shape(), (2, 4));
        assert_eq!(fs.w.row(0).iter().cloned().collect::<Vec<_>>(), vec![0.0, -1.0, 1.0, 0.0]);
        assert_eq!(fs.a1.shape(), (2, 4));
        assert_eq!(fs.a1[(0, 1)], 1.0);
        assert_eq!(fs.a1[(1, 3)], 1.0);
        assert!(fs.a1.column(0).iter().all(|&v| v == 0.0));
        assert_eq!(fs.a2.shape(), (1, 2));
        assert_eq!(fs.a.shape(), (4, 3));
        let mut zero_top = DMatrix::zeros(4, 3);
        zero_top.rows_mut(1, 3).copy_from(&fs.d);
        let mut zero_bottom = DMatrix::zeros(4, 3);
        zero_bottom.rows_mut(0, 3).copy_from(&fs.d);
        assert_eq!(fs.a, zero_top - zero_bottom);
    }

    #[test]
    fn fused_objective_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data = random_data(&mut rng, 9, 4, 2);
        let b = random_coef(&mut rng, 4, 2);
        let none = PenaltySpec::none(4);
        assert_eq!(fused_ladlasso_objective(&data, &b, &none), lad_objective(&data, &b) / 9.0);
        let pen = PenaltySpec::all(4, 0.3, 0.7).unwrap();
        let zero = CoefMatrix::zeros(4, 2);
        let ynorm: f64 = data.y().row_iter().map(|r| r.norm()).sum();
        assert!((fused_ladlasso_objective(&data, &zero, &pen) - ynorm / 9.0).abs() < 1e-14);
        let terms = lad_objective(&data, &b) / 9.0
            + 0.3 * group_penalty(&b, pen.gamma())
            + 0.7 * fusion_penalty(&b, pen.delta());
        assert!((fused_ladlasso_objective(&data, &b, &pen) - terms).abs() < 1e-12);
    }

    #[test]
    fn squared_objective_trace_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data = random_data(&mut rng, 7, 3, 2);
        let b = random_coef(&mut rng, 3, 2);
        let pen = PenaltySpec::all(3, 0.2, 0.4).unwrap();
        let r = data.y() - data.x() * b.as_matrix();
        let trace = (&r * r.transpose()).trace() / 7.0
            + 0.2 * group_penalty(&b, pen.gamma())
            + 0.4 * fusion_penalty(&b, pen.delta());
        assert!((fused_lasso_objective_sq(&data, &b, &pen) - trace).abs() < 1e-12);
        let zero = CoefMatrix::zeros(3, 2);
        assert!((fused_lasso_objective_sq(&data, &zero, &pen) - data.y().norm_squared() / 7.0).abs() < 1e-13);
    }

    #[test]
    fn squared_gradient_zero_at_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = random_data(&mut rng, 12, 3, 2);
        let x = data.x();
        let ols = (x.tr_mul(x)).cholesky().unwrap().solve(&x.tr_mul(data.y()));
        let b = CoefMatrix::new(ols).unwrap();
        let g = fused_lasso_gradient_sq(&data, &b, &PenaltySpec::none(3));
        assert!(g.matrix.amax() < 1e-12);

        // perturbations never beat the OLS loss
        let base = fused_lasso_objective_sq(&data, &b, &PenaltySpec::none(3));
        for _ in 0..20 {
            let pert = b.as_matrix() + DMatrix::from_fn(4, 2, |_, _| rng.random_range(-0.01..0.01));
            let v = fused_lasso_objective_sq(&data, &CoefMatrix::new(pert).unwrap(), &PenaltySpec::none(3));
            assert!(v >= base);
        }
    }

    #[test]
    fn squared_gradient_kronecker_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (n, p, q) = (10, 3, 2);
        let data = random_data(&mut rng, n, p, q);
        let b = random_coef(&mut rng, p, q);
        let none = PenaltySpec::none(p);
        let g = fused_lasso_gradient_sq(&data, &b, &none);
        let x = data.x();
        let iq = DMatrix::<f64>::identity(q, q);
        let yv = vec_rows(data.y());
        let beta = vec_rows(b.as_matrix());
        let kron_form = (-2.0 * kron(&x.transpose(), &iq) * yv + 2.0 * kron(&x.tr_mul(x), &iq) * beta) / n as f64;
        assert!((vec_rows(&g.matrix) - kron_form).amax() < 1e-12);
    }

    #[test]
    fn squared_gradient_reports_zero_rows() {
        let b = CoefMatrix::new(DMatrix::from_row_slice(4, 1, &[1.0, 0.0, 2.0, 2.0])).unwrap();
        let data = validate_dataset(
            DMatrix::from_element(2, 1, 1.0),
            DMatrix::from_row_slice(2, 4, &[1.0, 0.1, 0.2, 0.3, 1.0, 0.4, 0.5, 0.6]),
            true,
        )
        .unwrap();
        let pen = PenaltySpec::all(3, 1.0, 1.0).unwrap();
        let g = fused_lasso_gradient_sq(&data, &b, &pen);
        assert_eq!(g.zero_coef_rows, vec![1]);
        assert_eq!(g.zero_diff_rows, vec![2]);
    }
}

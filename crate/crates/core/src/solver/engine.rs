//! Minimizer for sums of row losses `Σᵢ wᵢ ρᵢ(‖yᵢ − B'xᵢ‖)` where each `ρᵢ` is
//! either the norm itself or its square.
//!
//! Each norm term is the conic program `min wᵢsᵢ` subject to `‖rᵢ‖ ≤ sᵢ`.
//! Adding the barrier `−μ ln(sᵢ² − ‖rᵢ‖²)` and minimizing over `sᵢ` in closed
//! form gives the smooth surrogate
//!
//! ```text
//! φ(t) = w s − μ ln(2μ s / w),    s = (μ + √(μ² + w²t²)) / w,
//! ```
//!
//! with `φ'(t) = w t / s`. The surrogate is minimized by damped Newton steps
//! (falling back to the reweighted least squares step with weights `w/s`)
//! along a decreasing sequence of `μ`; the objective of a path point is within
//! `2μ m` of the optimum for `m` norm rows. Rows whose residual is driven to
//! the kink are then constrained to exact zeros and the remaining smooth
//! problem is polished by Newton's method on the true objective, after which
//! the optimality conditions are checked directly.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{median, numerical_rank, unvec_rows, vec_rows, weighted_cross, weighted_gram};
use crate::solver::SolverConfig;

/// Ratio between consecutive smoothing widths.
const WIDTH_STEP: f64 = 0.1;
/// Initial smoothing width relative to the median residual norm.
const WIDTH_START: f64 = 0.1;
/// The polish is attempted once the width falls below this (relative).
const POLISH_FROM: f64 = 1e-3;
const DAMPING: [f64; 4] = [0.0, 1e-10, 1e-6, 1e-2];
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 30;
const STAGE_ITERS: usize = 60;
const POLISH_ITERS: usize = 60;
/// Relative tolerance of the stationarity check.
const CERTIFY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Loss {
    Norm,
    Squared,
}

pub(crate) struct Problem<'a> {
    pub y: &'a DMatrix<f64>,
    pub x: &'a DMatrix<f64>,
    pub weight: Vec<f64>,
    pub loss: Vec<Loss>,
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub b: DMatrix<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<(usize, f64)>,
}

/// How norm rows enter a gradient or Hessian.
#[derive(Debug, Clone, Copy)]
enum Smooth {
    /// The true norm; rows at zero must be masked out.
    Exact,
    /// The barrier surrogate with parameter `μ`.
    Barrier(f64),
}

fn barrier_s(w: f64, t: f64, mu: f64) -> f64 {
    (mu + (mu * mu + w * w * t * t).sqrt()) / w
}

impl<'a> Problem<'a> {
    pub fn all_norm(y: &'a DMatrix<f64>, x: &'a DMatrix<f64>, weight: f64) -> Problem<'a> {
        let m = y.nrows();
        Problem {
            y,
            x,
            weight: vec![weight; m],
            loss: vec![Loss::Norm; m],
        }
    }

    fn rows(&self) -> usize {
        self.y.nrows()
    }

    fn residuals(&self, b: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
        let r = self.y - self.x * b;
        let t = r.row_iter().map(|row| row.norm()).collect();
        (r, t)
    }

    fn objective_from(&self, t: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.rows() {
            acc += match self.loss[i] {
                Loss::Norm => self.weight[i] * t[i],
                Loss::Squared => self.weight[i] * t[i] * t[i],
            };
        }
        acc
    }

    fn objective(&self, b: &DMatrix<f64>) -> f64 {
        self.objective_from(&self.residuals(b).1)
    }

    fn smoothed_from(&self, t: &[f64], mu: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.rows() {
            let w = self.weight[i];
            acc += match self.loss[i] {
                Loss::Norm => {
                    let s = barrier_s(w, t[i], mu);
                    w * s - mu * (2.0 * mu * s / w).ln()
                }
                Loss::Squared => w * t[i] * t[i],
            };
        }
        acc
    }

    fn smoothed(&self, b: &DMatrix<f64>, mu: f64) -> f64 {
        self.smoothed_from(&self.residuals(b).1, mu)
    }

    /// Reweighted least squares weights `aᵢ`: the surrogate is majorized by
    /// `Σ aᵢ/2 ‖rᵢ‖²` up to a constant.
    fn irls_weights(&self, t: &[f64], mu: f64) -> Vec<f64> {
        (0..self.rows())
            .map(|i| match self.loss[i] {
                Loss::Norm => self.weight[i] / barrier_s(self.weight[i], t[i], mu),
                Loss::Squared => 2.0 * self.weight[i],
            })
            .collect()
    }

    /// Solves `(X'AX) B = X'AY` with the ridge floor `1e-10·trace`.
    fn weighted_ls(&self, a: &[f64]) -> Result<DMatrix<f64>> {
        let mut g = weighted_gram(self.x, a);
        let floor = 1e-10 * g.trace();
        for j in 0..g.nrows() {
            g[(j, j)] += floor;
        }
        let rhs = weighted_cross(self.x, a, self.y);
        let c = g.nrows();
        g.cholesky()
            .map(|ch| ch.solve(&rhs))
            .ok_or(Error::RankDeficient { rank: numerical_rank(self.x, 1e-12), cols: c })
    }

    /// `(α, β)` per row: the row's Hessian block is
    /// `α (xx') ⊗ I − β (x ⊗ u)(x ⊗ u)'` and its gradient is `−α x ⊗ r`.
    fn curvature(&self, t: &[f64], smooth: Smooth, skip: &[bool]) -> (Vec<f64>, Vec<f64>) {
        let m = self.rows();
        let mut alpha = vec![0.0; m];
        let mut beta = vec![0.0; m];
        for i in 0..m {
            if skip[i] {
                continue;
            }
            let w = self.weight[i];
            match (self.loss[i], smooth) {
                (Loss::Squared, _) => alpha[i] = 2.0 * w,
                (Loss::Norm, Smooth::Exact) => {
                    if t[i] > 0.0 {
                        alpha[i] = w / t[i];
                        beta[i] = w / t[i];
                    }
                }
                (Loss::Norm, Smooth::Barrier(mu)) => {
                    let s = barrier_s(w, t[i], mu);
                    let d = (mu * mu + w * w * t[i] * t[i]).sqrt();
                    alpha[i] = w / s;
                    beta[i] = w * w * t[i] * t[i] / (s * s * d);
                }
            }
        }
        (alpha, beta)
    }

    /// Gradient in `vec(B')` layout.
    fn gradient(&self, r: &DMatrix<f64>, t: &[f64], smooth: Smooth, skip: &[bool]) -> DVector<f64> {
        let (alpha, _) = self.curvature(t, smooth, skip);
        let mut psi = r.clone();
        for i in 0..self.rows() {
            psi.row_mut(i).scale_mut(alpha[i]);
        }
        vec_rows(&(-self.x.tr_mul(&psi)))
    }

    /// Hessian in `vec(B')` layout, assembled as
    /// `(X' diag(α) X) ⊗ I − Z' diag(β) Z` with `zᵢ = xᵢ ⊗ uᵢ`.
    fn hessian(&self, r: &DMatrix<f64>, t: &[f64], smooth: Smooth, skip: &[bool]) -> DMatrix<f64> {
        let m = self.rows();
        let c = self.x.ncols();
        let q = self.y.ncols();
        let (alpha, beta) = self.curvature(t, smooth, skip);
        let mut h = kron_identity(&weighted_gram(self.x, &alpha), q);
        if beta.iter().any(|&b| b != 0.0) {
            let mut z = DMatrix::zeros(m, c * q);
            for i in 0..m {
                if beta[i] == 0.0 {
                    continue;
                }
                let s = beta[i].sqrt() / t[i];
                for j in 0..c {
                    let xv = self.x[(i, j)];
                    if xv == 0.0 {
                        continue;
                    }
                    for l in 0..q {
                        z[(i, j * q + l)] = s * xv * r[(i, l)];
                    }
                }
            }
            h -= z.tr_mul(&z);
        }
        h
    }
}

/// `G ⊗ I_q` in `vec(B')` layout.
fn kron_identity(g: &DMatrix<f64>, q: usize) -> DMatrix<f64> {
    let c = g.nrows();
    let mut h = DMatrix::zeros(c * q, c * q);
    for j in 0..c {
        for jj in 0..c {
            for l in 0..q {
                h[(j * q + l, jj * q + l)] = g[(j, jj)];
            }
        }
    }
    h
}

struct Tracker {
    best_b: DMatrix<f64>,
    best_f: f64,
    trace: Vec<(usize, f64)>,
    iterations: usize,
    max_iter: usize,
}

impl Tracker {
    fn offer(&mut self, b: &DMatrix<f64>, f: f64) {
        if f <= self.best_f {
            self.best_b.copy_from(b);
            self.best_f = f;
            self.trace.push((self.iterations, f));
        }
    }

    fn exhausted(&self) -> bool {
        self.iterations >= self.max_iter
    }
}

pub(crate) fn minimize(
    prob: &Problem<'_>,
    init: Option<&DMatrix<f64>>,
    cfg: &SolverConfig,
) -> Result<Solution> {
    let c = prob.x.ncols();
    let rank = numerical_rank(prob.x, 1e-12);
    if rank < c {
        return Err(Error::RankDeficient { rank, cols: c });
    }

    let b0 = match init {
        Some(b) => b.clone(),
        None => prob.weighted_ls(&prob.weight)?,
    };
    let (_, t0) = prob.residuals(&b0);
    let f0 = prob.objective_from(&t0);
    let mut tr = Tracker {
        best_b: b0.clone(),
        best_f: f0,
        trace: vec![(0, f0)],
        iterations: 0,
        max_iter: cfg.max_iter,
    };

    let norm_rows: Vec<usize> = (0..prob.rows()).filter(|&i| prob.loss[i] == Loss::Norm).collect();
    if f0 == 0.0 || norm_rows.is_empty() {
        // Exact fit, or a pure least-squares problem.
        let b = if norm_rows.is_empty() { prob.weighted_ls(&prob.weight)? } else { b0 };
        let f = prob.objective(&b);
        return Ok(Solution {
            b,
            objective: f,
            iterations: 0,
            converged: true,
            trace: vec![(0, f)],
        });
    }

    let norm_t: Vec<f64> = norm_rows.iter().map(|&i| t0[i]).collect();
    let mut scale = median(&norm_t);
    if scale <= 0.0 {
        scale = norm_t.iter().cloned().fold(0.0, f64::max);
    }
    let w_mean = norm_rows.iter().map(|&i| prob.weight[i]).sum::<f64>() / norm_rows.len() as f64;
    let width_final = cfg.eps_smooth * scale;
    let mut width = (WIDTH_START * scale).max(width_final);
    let mut b = b0;
    let mut converged = false;
    loop {
        let mu = 0.5 * width * w_mean;
        let stage_done = barrier_stage(prob, &mut b, mu, cfg, &mut tr)?;
        if cfg.newton_refine && width <= POLISH_FROM * scale && !tr.exhausted() {
            // Kink rows sit at O(width) residuals and the others at O(scale).
            if polish(prob, &b, (width * scale).sqrt(), &mut tr) {
                converged = true;
                break;
            }
        }
        if width <= width_final {
            converged = stage_done;
            break;
        }
        if tr.exhausted() {
            break;
        }
        width = (width * WIDTH_STEP).max(width_final);
    }

    Ok(Solution {
        b: tr.best_b,
        objective: tr.best_f,
        iterations: tr.iterations,
        converged,
        trace: tr.trace,
    })
}

/// Minimizes the surrogate at barrier parameter `mu`. Returns `true` when the
/// stage converged: the Newton decrement fell below `1e-6 μ`, or without
/// Newton steps the relative decrease fell below `tol_rel`.
fn barrier_stage(
    prob: &Problem<'_>,
    b: &mut DMatrix<f64>,
    mu: f64,
    cfg: &SolverConfig,
    tr: &mut Tracker,
) -> Result<bool> {
    let no_skip = vec![false; prob.rows()];
    let smooth = Smooth::Barrier(mu);
    let (mut r, mut t) = prob.residuals(b);
    let mut fs = prob.smoothed_from(&t, mu);
    for _ in 0..STAGE_ITERS {
        if tr.exhausted() {
            return Ok(false);
        }
        tr.iterations += 1;
        let mut next = None;
        if cfg.newton_refine {
            let g = prob.gradient(&r, &t, smooth, &no_skip);
            let h = prob.hessian(&r, &t, smooth, &no_skip);
            match newton_step(prob, b, fs, &g, &h, mu) {
                Step::Flat => return Ok(true),
                Step::Moved(cand, f) => next = Some((cand, f)),
                Step::Failed => {}
            }
        }
        let (b_new, fs_new) = match next {
            Some(v) => v,
            None => {
                let b_irls = prob.weighted_ls(&prob.irls_weights(&t, mu))?;
                let f = prob.smoothed(&b_irls, mu);
                (b_irls, f)
            }
        };
        if !(fs_new <= fs) {
            return Ok(!cfg.newton_refine);
        }
        let rel = (fs - fs_new) / fs_new.abs().max(f64::MIN_POSITIVE);
        *b = b_new;
        fs = fs_new;
        let res = prob.residuals(b);
        r = res.0;
        t = res.1;
        tr.offer(b, prob.objective_from(&t));
        if !cfg.newton_refine && rel <= cfg.tol_rel {
            return Ok(true);
        }
    }
    Ok(false)
}

enum Step {
    Flat,
    Moved(DMatrix<f64>, f64),
    Failed,
}

/// Newton step on the surrogate with Armijo backtracking. The step counts as
/// flat when the squared Newton decrement is below `1e-6 μ`.
fn newton_step(
    prob: &Problem<'_>,
    b: &DMatrix<f64>,
    fs: f64,
    g: &DVector<f64>,
    h: &DMatrix<f64>,
    mu: f64,
) -> Step {
    let (c, q) = b.shape();
    let dim = c * q;
    let hscale = (h.trace() / dim as f64).max(f64::MIN_POSITIVE);
    for nu in DAMPING {
        let mut m = h.clone();
        for k in 0..dim {
            m[(k, k)] += nu * hscale;
        }
        let Some(ch) = m.cholesky() else { continue };
        let d = -ch.solve(g);
        let slope = g.dot(&d);
        if !(slope < 0.0) {
            continue;
        }
        if -slope <= (1e-6 * mu).max(64.0 * f64::EPSILON * fs.abs()) {
            return Step::Flat;
        }
        let dm = unvec_rows(&d, c, q);
        let mut step = 1.0;
        for _ in 0..MAX_HALVINGS {
            let cand = b + &dm * step;
            let f = prob.smoothed(&cand, mu);
            if f <= fs + ARMIJO * step * slope {
                return Step::Moved(cand, f);
            }
            step *= 0.5;
        }
    }
    Step::Failed
}

/// Constrains rows with residual norm `≤ kappa` to exact zeros and minimizes
/// the true objective over that affine set by Newton's method. Returns `true`
/// when the final point satisfies the optimality conditions of the full
/// problem.
fn polish(prob: &Problem<'_>, start: &DMatrix<f64>, kappa: f64, tr: &mut Tracker) -> bool {
    let (c, q) = start.shape();
    let dim = c * q;
    let (_, t) = prob.residuals(start);
    let kinks: Vec<usize> = (0..prob.rows())
        .filter(|&i| prob.loss[i] == Loss::Norm && t[i] <= kappa)
        .collect();
    let mut skip = vec![false; prob.rows()];
    for &i in &kinks {
        skip[i] = true;
    }

    let b_start = vec_rows(start);
    let (b_proj, basis) = if kinks.is_empty() {
        (b_start, DMatrix::identity(dim, dim))
    } else {
        let mut cm = DMatrix::zeros(kinks.len() * q, dim);
        let mut rhs = DVector::zeros(kinks.len() * q);
        for (k, &i) in kinks.iter().enumerate() {
            for l in 0..q {
                for j in 0..c {
                    cm[(k * q + l, j * q + l)] = prob.x[(i, j)];
                }
                rhs[k * q + l] = prob.y[(i, l)];
            }
        }
        let eig = cm.tr_mul(&cm).symmetric_eigen();
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let tol = 1e-12 * lmax;
        let range: Vec<usize> = (0..dim).filter(|&k| eig.eigenvalues[k] > tol).collect();
        let null: Vec<usize> = (0..dim).filter(|&k| eig.eigenvalues[k] <= tol).collect();
        let viol = &cm * &b_start - &rhs;
        let back = cm.tr_mul(&viol);
        let mut correction = DVector::zeros(dim);
        for &k in &range {
            let v = eig.eigenvectors.column(k);
            correction += v * (v.dot(&back) / eig.eigenvalues[k]);
        }
        let b_proj = &b_start - correction;
        let resid = (&cm * &b_proj - &rhs).amax();
        if resid > 1e-8 * (1.0 + rhs.amax()) {
            return false;
        }
        let basis = DMatrix::from_fn(dim, null.len(), |i, k| eig.eigenvectors[(i, null[k])]);
        (b_proj, basis)
    };

    let mut b = b_proj;
    let mut f = prob.objective(&unvec_rows(&b, c, q));
    tr.offer(&unvec_rows(&b, c, q), f);
    if basis.ncols() == 0 {
        return certify(prob, &unvec_rows(&b, c, q), &kinks, &skip);
    }

    for _ in 0..POLISH_ITERS {
        if tr.exhausted() {
            break;
        }
        let bm = unvec_rows(&b, c, q);
        let (r, t) = prob.residuals(&bm);
        if (0..prob.rows()).any(|i| !skip[i] && prob.loss[i] == Loss::Norm && t[i] == 0.0) {
            break;
        }
        let g = basis.tr_mul(&prob.gradient(&r, &t, Smooth::Exact, &skip));
        let gnorm = g.norm();
        if gnorm == 0.0 {
            break;
        }
        let h = basis.tr_mul(&prob.hessian(&r, &t, Smooth::Exact, &skip)) * &basis;
        let hscale = (h.trace() / h.nrows() as f64).max(f64::MIN_POSITIVE);
        // Objective differences below this are rounding noise; such steps are
        // only taken when they shrink the reduced gradient.
        let noise = 16.0 * f64::EPSILON * f.abs();

        let mut accepted = None;
        'damping: for nu in [1e-12, 1e-8, 1e-4, 1.0] {
            let mut m = h.clone();
            for k in 0..m.nrows() {
                m[(k, k)] += nu * hscale;
            }
            let Some(ch) = m.cholesky() else { continue };
            let dz = -ch.solve(&g);
            let slope = g.dot(&dz);
            if !(slope < 0.0) {
                continue;
            }
            let d = &basis * &dz;
            let mut step = 1.0;
            for _ in 0..MAX_HALVINGS {
                let cand = &b + &d * step;
                let cm = unvec_rows(&cand, c, q);
                let fc = prob.objective(&cm);
                if fc <= f + ARMIJO * step * slope {
                    accepted = Some((cand, fc));
                    break 'damping;
                }
                if step == 1.0 && fc <= f + noise {
                    let (rc, tc) = prob.residuals(&cm);
                    let gc = basis.tr_mul(&prob.gradient(&rc, &tc, Smooth::Exact, &skip));
                    if gc.norm() < gnorm {
                        accepted = Some((cand, fc));
                        break 'damping;
                    }
                }
                step *= 0.5;
            }
        }
        let Some((cand, fc)) = accepted else { break };
        tr.iterations += 1;
        let moved = (&cand - &b).amax();
        b = cand;
        f = fc;
        if f <= tr.best_f + noise {
            tr.best_b.copy_from(&unvec_rows(&b, c, q));
            tr.best_f = f;
            tr.trace.push((tr.iterations, f));
        } else {
            break;
        }
        if moved <= 1e-15 * (1.0 + b.amax()) {
            break;
        }
    }
    f - tr.best_f <= 16.0 * f64::EPSILON * f.abs() && certify(prob, &unvec_rows(&b, c, q), &kinks, &skip)
}

/// Checks the optimality conditions at `b` with the rows `kinks` at zero
/// residual: the smooth gradient must be matched by kink-row subgradients
/// `wᵢ xᵢ ⊗ vᵢ` with `‖vᵢ‖ ≤ 1`. The multipliers are the minimum-norm least
/// squares solution.
fn certify(prob: &Problem<'_>, b: &DMatrix<f64>, kinks: &[usize], skip: &[bool]) -> bool {
    let (c, q) = b.shape();
    let (r, t) = prob.residuals(b);
    if (0..prob.rows()).any(|i| !skip[i] && prob.loss[i] == Loss::Norm && t[i] == 0.0) {
        return false;
    }
    let g = -prob.gradient(&r, &t, Smooth::Exact, skip);
    let scale: f64 = (0..prob.rows())
        .map(|i| {
            let xi = prob.x.row(i).norm();
            match prob.loss[i] {
                Loss::Norm => prob.weight[i] * xi,
                Loss::Squared => 2.0 * prob.weight[i] * xi * t[i],
            }
        })
        .sum();
    let tol = CERTIFY_TOL * scale.max(f64::MIN_POSITIVE);
    if kinks.is_empty() {
        return g.norm() <= tol;
    }
    let mut ct = DMatrix::zeros(c * q, kinks.len() * q);
    for (k, &i) in kinks.iter().enumerate() {
        for l in 0..q {
            for j in 0..c {
                ct[(j * q + l, k * q + l)] = prob.x[(i, j)];
            }
        }
    }
    let svd = ct.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let Ok(mu) = svd.solve(&g, 1e-12 * smax) else { return false };
    if (&ct * &mu - &g).norm() > tol {
        return false;
    }
    kinks
        .iter()
        .enumerate()
        .all(|(k, &i)| mu.rows(k * q, q).norm() / prob.weight[i] <= 1.0 + 1e-6)
}

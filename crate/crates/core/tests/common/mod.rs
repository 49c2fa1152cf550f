#![allow(dead_code)]

use ladlasso::{CoefMatrix, Dataset, PenaltySpec};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Gaussian covariates with an intercept column and `Y = XB + E`, where the
/// errors are heavy-ish (normal scaled by an independent exponential).
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, p: usize, q: usize) -> (Dataset, CoefMatrix) {
    let cov = normal_matrix(rng, n, p);
    let b = normal_matrix(rng, p + 1, q);
    let mut x = DMatrix::from_element(n, p + 1, 1.0);
    x.view_mut((0, 1), (n, p)).copy_from(&cov);
    let mut e = normal_matrix(rng, n, q);
    for i in 0..n {
        let s: f64 = -(1.0 - rng.random::<f64>()).ln();
        e.row_mut(i).scale_mut(0.5 + s);
    }
    let y = &x * &b + e;
    (Dataset::new(y, x).unwrap(), CoefMatrix::new(b).unwrap())
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Central differences of `f` with respect to every entry of `b`.
pub fn fd_gradient(b: &DMatrix<f64>, h: f64, f: impl Fn(&DMatrix<f64>) -> f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(b.nrows(), b.ncols());
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            let mut bp = b.clone();
            let mut bm = b.clone();
            bp[(i, j)] += h;
            bm[(i, j)] -= h;
            g[(i, j)] = (f(&bp) - f(&bm)) / (2.0 * h);
        }
    }
    g
}

/// Relative error `‖a − b‖ / max(‖b‖, floor)`.
pub fn mat_rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}

/// Direct evaluation of `(1/n)Σ‖yᵢ − B'xᵢ‖ + λ₁Σγⱼ‖βⱼ‖ + λ₂Σδₖ‖βₖ₊₁ − βₖ‖`
/// with a pseudo-Huber surrogate `√(t² + s²) − s` for every norm.
fn smoothed(data: &Dataset, pen: &PenaltySpec, b: &DMatrix<f64>, s: f64, grad: &mut DMatrix<f64>) -> f64 {
    let n = data.n() as f64;
    let r = data.y() - data.x() * b;
    grad.fill(0.0);
    let mut value = 0.0;
    for i in 0..data.n() {
        let ri = r.row(i);
        let d = (ri.norm_squared() + s * s).sqrt();
        value += (d - s) / n;
        let xi = data.x().row(i);
        for j in 0..b.nrows() {
            for l in 0..b.ncols() {
                grad[(j, l)] -= xi[j] * ri[l] / (d * n);
            }
        }
    }
    for j in 1..b.nrows() {
        if pen.lambda1() > 0.0 && pen.gamma()[j - 1] {
            let d = (b.row(j).norm_squared() + s * s).sqrt();
            value += pen.lambda1() * (d - s);
            for l in 0..b.ncols() {
                grad[(j, l)] += pen.lambda1() * b[(j, l)] / d;
            }
        }
    }
    for k in 1..b.nrows().saturating_sub(1) {
        if pen.lambda2() > 0.0 && pen.delta()[k - 1] {
            let diff = b.row(k + 1) - b.row(k);
            let d = (diff.norm_squared() + s * s).sqrt();
            value += pen.lambda2() * (d - s);
            for l in 0..b.ncols() {
                grad[(k + 1, l)] += pen.lambda2() * diff[l] / d;
                grad[(k, l)] -= pen.lambda2() * diff[l] / d;
            }
        }
    }
    value
}

fn exact(data: &Dataset, pen: &PenaltySpec, b: &DMatrix<f64>) -> f64 {
    let mut g = DMatrix::zeros(b.nrows(), b.ncols());
    smoothed(data, pen, b, 0.0, &mut g)
}

/// Long-run first-order oracle for the penalized LAD criterion: accelerated
/// gradient with backtracking and restarts on a pseudo-Huber surrogate whose
/// width shrinks geometrically, started from least squares. Returns the best
/// exact objective seen together with its coefficients.
pub fn first_order_oracle(data: &Dataset, pen: &PenaltySpec) -> (f64, DMatrix<f64>) {
    let x = data.x();
    let xtx = x.tr_mul(x);
    let mut b = xtx.cholesky().expect("full rank design").solve(&x.tr_mul(data.y()));
    let mut best = (exact(data, pen, &b), b.clone());
    let (c, q) = b.shape();
    let mut g = DMatrix::zeros(c, q);
    let mut gz = DMatrix::zeros(c, q);
    let mut s = 1.0;
    let mut lip = 1.0;
    while s > 1e-10 {
        let mut z = b.clone();
        let mut t: f64 = 1.0;
        let mut fb = smoothed(data, pen, &b, s, &mut g);
        for _ in 0..20_000 {
            let fz = smoothed(data, pen, &z, s, &mut gz);
            lip *= 0.8;
            let next = loop {
                let cand = &z - &gz * (1.0 / lip);
                let fc = smoothed(data, pen, &cand, s, &mut g);
                let step = &cand - &z;
                if fc <= fz + gz.dot(&step) + 0.5 * lip * step.norm_squared() + 1e-15 * fz.abs() {
                    break (cand, fc);
                }
                lip *= 2.0;
            };
            let (cand, fc) = next;
            if fc > fb {
                z = b.clone();
                t = 1.0;
                continue;
            }
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            z = &cand + (&cand - &b) * ((t - 1.0) / t_next);
            let moved = (&cand - &b).norm();
            b = cand;
            t = t_next;
            let small = fb - fc <= 1e-16 * fb.abs() && moved <= 1e-14 * (1.0 + b.norm());
            fb = fc;
            if small {
                break;
            }
        }
        let e = exact(data, pen, &b);
        if e < best.0 {
            best = (e, b.clone());
        }
        s *= 0.1;
    }
    best
}

mod common;

use ladlasso::tuning::{assign_folds, cv_error, grid_search, CvPlan};
use ladlasso::{PenaltySpec, SolverConfig};
use proptest::prelude::*;

#[test]
fn warm_started_surface_matches_cold_solves() {
    let mut r = common::rng(42);
    let (data, _) = common::random_instance(&mut r, 40, 4, 2);
    let cfg = SolverConfig::default();
    let plan = CvPlan::new(data.n(), 4, 3, &[0.0, 0.1], &[0.0, 0.05, 0.3]).unwrap();
    let surface = grid_search(&data, &[true; 4], &[true; 3], &plan, &cfg).unwrap();
    assert!(surface.failures.is_empty());
    for (i, &l1) in plan.lambda1_grid().iter().enumerate() {
        for (j, &l2) in plan.lambda2_grid().iter().enumerate() {
            let cold = cv_error(&data, &PenaltySpec::all(4, l1, l2).unwrap(), &plan, &cfg).unwrap();
            assert!(common::rel_err(surface.errors[(i, j)], cold) < 1e-6, "({l1}, {l2})");
        }
    }
    // Pooled error is the size-weighted mean of the per-fold errors.
    let sizes: Vec<usize> = (0..4).map(|f| plan.fold_assignment().iter().filter(|&&a| a == f).count()).collect();
    let pooled: f64 = (0..4).map(|f| surface.per_fold[f][(1, 2)] * sizes[f] as f64).sum::<f64>() / 40.0;
    assert!(common::rel_err(pooled, surface.errors[(1, 2)]) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn folds_are_deterministic_and_balanced(n in 2usize..200, k in 2usize..10, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let a = assign_folds(n, k, seed).unwrap();
        prop_assert_eq!(&a, &assign_folds(n, k, seed).unwrap());
        let counts: Vec<usize> = (0..k).map(|f| a.iter().filter(|&&v| v == f).count()).collect();
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
    }
}

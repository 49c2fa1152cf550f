use std::ops::RangeInclusive;

use crate::model::{CoefMatrix, PenaltySpec};

/// Active covariate rows and fused runs of a coefficient estimate.
///
/// With `τ = zero_tau · max(1, ‖B̂‖∞)`, covariate `j` is active when
/// `‖β̂_j‖ > τ`, and neighbours `j, j+1` share a group when the difference is
/// penalized and `‖β̂_{j+1} − β̂_j‖ ≤ τ`.
pub fn extract_structure(
    b_hat: &CoefMatrix,
    pen: &PenaltySpec,
    zero_tau: f64,
) -> (Vec<usize>, Vec<RangeInclusive<usize>>) {
    let p = b_hat.p();
    let tau = b_hat.zero_threshold(zero_tau);
    let m = b_hat.as_matrix();
    let active = (1..=p).filter(|&j| b_hat.row_norm(j) > tau).collect();

    let mut groups = Vec::new();
    if p == 0 {
        return (active, groups);
    }
    let mut start = 1;
    for j in 1..p {
        let fused = pen.delta().get(j - 1).copied().unwrap_or(false)
            && (m.row(j + 1) - m.row(j)).norm() <= tau;
        if !fused {
            groups.push(start..=j);
            start = j + 1;
        }
    }
    groups.push(start..=p);
    (active, groups)
}

//! Closed-form approximation of the QP from its quadratic-penalty Lagrangian.

use super::filter::{Direction, FilterCoefficients, SynthesisMethod};
use super::qp::DEFAULT_RIDGE;
use super::{Denominator, SignatureMatrix};
use crate::dae::StackedDae;
use crate::error::{Error, Result};
use crate::linalg::{spd_solve, Mat};

pub const DEFAULT_DELTA: f64 = 1e6;

/// `N_i(delta) = (G_1 e_i)^T / (2 delta) * (delta^{-1} (Phi + Psi + eps I) + G_0 G_0^T)^{-1}`,
/// with `i*` chosen by enumerating every direction.
///
/// The penalty only drives `N G_0` to zero as `delta` grows; the residual is reported in
/// `constraint_residual`. When `ridge = 0` leaves the inner matrix singular the solve is
/// retried with [`DEFAULT_RIDGE`], and `FilterCoefficients::ridge` records what was used.
pub fn solve_analytic(
    stacked: &StackedDae,
    sig: &SignatureMatrix,
    delta: f64,
    ridge: f64,
    denominator: &Denominator,
) -> Result<FilterCoefficients> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter { field: "delta", reason: format!("must be > 0, got {delta}") });
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::InvalidParameter { field: "ridge", reason: format!("must be >= 0, got {ridge}") });
    }
    let n = stacked.n_coeffs();
    let base = &stacked.g0 * stacked.g0.transpose();
    let solve_with = |eps: f64| -> Option<Mat> {
        let inner = (sig.total() + Mat::identity(n, n) * eps) / delta + &base;
        let inner = (&inner + inner.transpose()) * 0.5;
        inner.cholesky().map(|c| c.solve(&stacked.g1))
    };
    let (solution, used_ridge) = match solve_with(ridge) {
        Some(x) => (x, ridge),
        None if ridge == 0.0 => {
            let x = solve_with(DEFAULT_RIDGE)
                .map(Ok)
                .unwrap_or_else(|| {
                    let inner = (sig.total() + Mat::identity(n, n) * DEFAULT_RIDGE) / delta + &base;
                    spd_solve(&inner, &stacked.g1)
                })?;
            (x, DEFAULT_RIDGE)
        }
        None => {
            let inner = (sig.total() + Mat::identity(n, n) * ridge) / delta + &base;
            (spd_solve(&inner, &stacked.g1)?, ridge)
        }
    };
    let candidates = solution / (2.0 * delta);

    let mut best: Option<(f64, usize)> = None;
    for i in 0..stacked.n_directions() {
        let value = candidates.column(i).dot(&stacked.g1.column(i)).abs();
        if best.is_none_or(|(v, _)| value > v) {
            best = Some((value, i));
        }
    }
    let (_, index) = best.ok_or_else(|| Error::Synthesis("no sensitivity directions".into()))?;

    let mut filter = FilterCoefficients::new(
        candidates.column(index).iter().copied().collect(),
        stacked.d_n,
        stacked.n_x + stacked.n_y,
        denominator.clone(),
    )?;
    filter.active_direction = Direction { index, positive: true };
    filter.ridge = used_ridge;
    filter.method = SynthesisMethod::Analytic { delta };
    filter.canonicalize_sign(stacked);
    filter.evaluate(stacked, sig);
    Ok(filter)
}

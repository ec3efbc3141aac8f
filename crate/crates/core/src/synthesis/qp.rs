//! Equality-constrained QP for the filter numerator, solved by the null-space method.
//!
//! The infinity norm in the objective is replaced by each of the `2 (n_x + 1)` signed
//! directions; every subproblem is a strictly convex QP once the ridge is added, and the
//! direction with the lowest objective wins.

use super::filter::{Direction, FilterCoefficients, SynthesisMethod};
use super::{Denominator, SignatureMatrix};
use crate::dae::{feasibility_check, StackedDae};
use crate::error::{Error, Result};
use crate::linalg::{left_null_space, Mat, Vector};

pub const DEFAULT_RIDGE: f64 = 1e-6;

/// Minimize `N (Phi + Psi + eps I) N^T - N G_1 (±e_i)` subject to `N G_0 = 0`.
pub fn solve_qp(
    stacked: &StackedDae,
    sig: &SignatureMatrix,
    ridge: f64,
    denominator: &Denominator,
) -> Result<FilterCoefficients> {
    let report = feasibility_check(stacked);
    if !report.equality_feasible {
        return Err(Error::Infeasible(format!("decoupling constraint has no nonzero solution ({report})")));
    }
    if !report.sensitivity_possible {
        return Err(Error::Infeasible(format!("no feasible numerator is fault sensitive ({report})")));
    }
    let n = stacked.n_coeffs();
    if sig.phi_bar.nrows() != n {
        return Err(Error::Dimension(format!("signature is {}x{}, expected {n}x{n}", sig.phi_bar.nrows(), sig.phi_bar.ncols())));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidParameter { field: "ridge", reason: format!("must be finite and >= 0, got {ridge}") });
    }

    let basis = left_null_space(&stacked.g0);
    let q = sig.total() + Mat::identity(n, n) * ridge;
    let q_null = basis.transpose() * &q * &basis;
    let q_null = (&q_null + q_null.transpose()) * 0.5;
    let chol = q_null.clone().cholesky().ok_or_else(|| {
        Error::Synthesis("quadratic term is singular on the constraint null space; every direction is unbounded".into())
    })?;

    // c_z for all directions at once; the sign only flips y.
    let c_null = basis.transpose() * &stacked.g1;
    let y_all = chol.solve(&c_null) * 0.5;

    let mut best: Option<(f64, Direction, Vector)> = None;
    for i in 0..stacked.n_directions() {
        for positive in [true, false] {
            let sign = if positive { 1.0 } else { -1.0 };
            let y = y_all.column(i) * sign;
            let c = c_null.column(i) * sign;
            // N Q N - c N at the stationary point
            let value = y.dot(&(&q_null * &y)) - c.dot(&y);
            if !value.is_finite() {
                continue;
            }
            let better = match &best {
                None => true,
                Some((v, _, _)) => value < *v - 1e-12 * v.abs().max(1e-300),
            };
            if better {
                best = Some((value, Direction { index: i, positive }, y.into_owned()));
            }
        }
    }
    let (_, direction, y) = best.ok_or_else(|| Error::Synthesis("no finite subproblem solution".into()))?;
    let n_bar = &basis * y;

    let mut filter = FilterCoefficients::new(n_bar.iter().copied().collect(), stacked.d_n, stacked.n_x + stacked.n_y, denominator.clone())?;
    filter.active_direction = direction;
    filter.ridge = ridge;
    filter.method = SynthesisMethod::Qp;
    filter.canonicalize_sign(stacked);
    filter.evaluate(stacked, sig);
    Ok(filter)
}

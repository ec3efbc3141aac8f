use crate::error::Result;
use crate::linalg::{observable_basis, Mat, Vector};
use crate::model::DiscreteModel;

use super::FilterCoefficients;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detectability {
    /// `margin = r_ss^2 - J_th`; detectable when positive.
    Margin { steady_residual: f64, margin: f64, detectable: bool, observable_dim: usize },
    /// `I - A_o` is singular, the faulty observable subsystem has no fixed point.
    MarginallyStable { observable_dim: usize },
}

impl Detectability {
    pub fn is_detectable(&self) -> bool {
        matches!(self, Detectability::Margin { detectable: true, .. })
    }
}

/// Steady-state residual after a ground fault versus the threshold.
///
/// The faulty model is reduced to its observable part, `y_ss = C_o (I - A_o)^{-1} B_o u_ss`, and
/// the residual is `sum_s N_s L_0 [y_ss; u_ss] / a(1)`.
pub fn detectability_check(
    filter: &FilterCoefficients,
    faulty: &DiscreteModel,
    l0: &Mat,
    u_ss: &[f64],
    j_th: f64,
) -> Result<Detectability> {
    let basis = observable_basis(&faulty.a, &faulty.c);
    let observable_dim = basis.nrows();
    let a_o = &basis * &faulty.a * basis.transpose();
    let b_o = &basis * &faulty.b_u;
    let c_o = &faulty.c * basis.transpose();
    let lhs = Mat::identity(observable_dim, observable_dim) - &a_o;
    let sv = lhs.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if sv.min() <= 1e-12 * smax.max(1.0) {
        return Ok(Detectability::MarginallyStable { observable_dim });
    }
    let u = Vector::from_column_slice(u_ss);
    let Some(x_o) = lhs.lu().solve(&(&b_o * &u)) else {
        return Ok(Detectability::MarginallyStable { observable_dim });
    };
    let y = &c_o * x_o;
    let mut z = Vec::with_capacity(y.len() + u.len());
    z.extend(y.iter());
    z.extend(u.iter());
    let r = steady_gain(filter, l0, &z);
    let margin = r * r - j_th;
    Ok(Detectability::Margin { steady_residual: r, margin, detectable: margin > 0.0, observable_dim })
}

/// `N(1) L_0 z / a(1)` for a constant input `z = [y; u]`.
pub fn steady_gain(filter: &FilterCoefficients, l0: &Mat, z: &[f64]) -> f64 {
    let taps = filter.input_taps(l0);
    let sum: f64 = taps.iter().map(|tap| tap.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()).sum();
    sum / filter.denominator.at_one()
}

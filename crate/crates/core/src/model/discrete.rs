//! Sampled-data versions of the continuous models.

use serde::{Deserialize, Serialize};

use super::ContinuousModel;
use crate::error::{Error, Result};
use crate::linalg::{hstack, Mat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    /// Exact for inputs held constant over each sampling interval.
    #[default]
    ZeroOrderHold,
    /// `A_d = I + Ts A`, `B_d = Ts B`; kept for cross-checking.
    ForwardEuler,
}

/// `x(k+1) = A x(k) + B_u u(k) + B_d d(k)`, `y(k) = C x(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    pub a: Mat,
    pub b_u: Mat,
    pub b_d: Mat,
    pub c: Mat,
    pub ts: f64,
    pub method: Discretization,
    pub faulty: bool,
}

impl DiscreteModel {
    pub fn n_x(&self) -> usize {
        self.a.nrows()
    }

    /// Fixed point of the recursion for constant `u` and `d`.
    pub fn steady_state(&self, u: &[f64], d: &[f64]) -> Result<Vec<f64>> {
        let n = self.n_x();
        let rhs = &self.b_u * nalgebra::DVector::from_column_slice(u)
            + &self.b_d * nalgebra::DVector::from_column_slice(d);
        let lhs = Mat::identity(n, n) - &self.a;
        let x = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("I - A is singular; no steady state".into()))?;
        Ok(x.iter().copied().collect())
    }
}

/// Discretize `[A, B_u, B_d]` jointly with sampling period `ts`.
pub fn discretize(model: &ContinuousModel, ts: f64, method: Discretization) -> Result<DiscreteModel> {
    if !(ts.is_finite() && ts > 0.0) {
        return Err(Error::InvalidParameter { field: "Ts", reason: format!("must be > 0, got {ts}") });
    }
    let n = model.a.nrows();
    let nu = model.b_u.ncols();
    let b = hstack(&[&model.b_u, &model.b_d]);
    let m = b.ncols();
    let (a_d, b_all) = match method {
        Discretization::ZeroOrderHold => {
            // exp([[A, B], [0, 0]] Ts) = [[A_d, B_d], [0, I]]
            let mut aug = Mat::zeros(n + m, n + m);
            aug.view_mut((0, 0), (n, n)).copy_from(&(&model.a * ts));
            aug.view_mut((0, n), (n, m)).copy_from(&(&b * ts));
            let e = aug.exp();
            (e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned())
        }
        Discretization::ForwardEuler => (Mat::identity(n, n) + &model.a * ts, &b * ts),
    };
    if a_d.iter().chain(b_all.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entries after discretization".into()));
    }
    Ok(DiscreteModel {
        a: a_d,
        b_u: b_all.columns(0, nu).into_owned(),
        b_d: b_all.columns(nu, m - nu).into_owned(),
        c: model.c.clone(),
        ts,
        method,
        faulty: model.faulty,
    })
}

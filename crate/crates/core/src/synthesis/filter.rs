use serde::{Deserialize, Serialize};

use super::{Denominator, SignatureMatrix};
use crate::dae::StackedDae;
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};

/// One of the `2 (n_x + 1)` signed sensitivity directions `±e_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Direction {
    pub index: usize,
    pub positive: bool,
}

impl Direction {
    pub fn sign(&self) -> f64 {
        if self.positive {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthesisMethod {
    Qp,
    Analytic { delta: f64 },
}

/// Synthesized numerator `N_bar = [N_0, ..., N_{d_N}]` together with its denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoefficients {
    pub n_bar: Vec<f64>,
    pub d_n: usize,
    /// Width of each `N_s`, `n_x + n_y`.
    pub block: usize,
    pub denominator: Denominator,
    /// `N (Phi + Psi) N^T - ||N G_1||_inf`.
    pub objective_value: f64,
    /// `||N G_1||_inf`.
    pub sensitivity: f64,
    pub active_direction: Direction,
    /// `||N G_0||_inf`.
    pub constraint_residual: f64,
    pub ridge: f64,
    pub method: SynthesisMethod,
}

impl FilterCoefficients {
    pub fn new(n_bar: Vec<f64>, d_n: usize, block: usize, denominator: Denominator) -> Result<Self> {
        if n_bar.len() != (d_n + 1) * block {
            return Err(Error::Dimension(format!(
                "numerator has {} coefficients, expected (d_N + 1) * {block} = {}",
                n_bar.len(),
                (d_n + 1) * block
            )));
        }
        if denominator.degree() <= d_n {
            return Err(Error::InvalidParameter {
                field: "denominator",
                reason: format!("degree {} must exceed d_N = {d_n}", denominator.degree()),
            });
        }
        Ok(Self {
            n_bar,
            d_n,
            block,
            denominator,
            objective_value: f64::NAN,
            sensitivity: f64::NAN,
            active_direction: Direction { index: 0, positive: true },
            constraint_residual: f64::NAN,
            ridge: 0.0,
            method: SynthesisMethod::Qp,
        })
    }

    pub fn n_vector(&self) -> Vector {
        Vector::from_column_slice(&self.n_bar)
    }

    /// Coefficient row `N_s`.
    pub fn row(&self, s: usize) -> &[f64] {
        &self.n_bar[s * self.block..(s + 1) * self.block]
    }

    /// Rows `N_s L_0`, each acting on `z = [y; u]`.
    pub fn input_taps(&self, l0: &Mat) -> Vec<Vec<f64>> {
        (0..=self.d_n)
            .map(|s| {
                let row = Vector::from_column_slice(self.row(s));
                (l0.transpose() * row).iter().copied().collect()
            })
            .collect()
    }

    /// `N M N^T`.
    pub fn quadratic(&self, m: &Mat) -> f64 {
        let n = self.n_vector();
        n.dot(&(m * &n))
    }

    /// Fill the diagnostic fields from the stacked matrices.
    pub(crate) fn evaluate(&mut self, stacked: &StackedDae, sig: &SignatureMatrix) {
        let n = self.n_vector();
        let (objective, sensitivity) = theorem_objective(stacked, sig, &n);
        self.objective_value = objective;
        self.sensitivity = sensitivity;
        self.constraint_residual = constraint_residual(stacked, &n);
    }

    /// Flip the sign so that `N G_1 e_{i*} > 0`.
    pub(crate) fn canonicalize_sign(&mut self, stacked: &StackedDae) {
        let i = self.active_direction.index;
        let proj: f64 = self.n_vector().dot(&stacked.g1.column(i));
        if proj < 0.0 {
            self.n_bar.iter_mut().for_each(|v| *v = -*v);
        }
        self.active_direction.positive = true;
    }
}

/// `N (Phi + Psi) N^T - ||N G_1||_inf` and the sensitivity term on its own.
pub fn theorem_objective(stacked: &StackedDae, sig: &SignatureMatrix, n: &Vector) -> (f64, f64) {
    let q = sig.total();
    let quad = n.dot(&(&q * n));
    let sens = (stacked.g1.transpose() * n).amax();
    (quad - sens, sens)
}

pub fn constraint_residual(stacked: &StackedDae, n: &Vector) -> f64 {
    (stacked.g0.transpose() * n).amax()
}

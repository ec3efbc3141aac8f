use serde::{Deserialize, Serialize};

use super::{FilterCoefficients, SignatureMatrix};
use crate::error::{Error, Result};

/// Detection threshold on `J = r^2`.
///
/// `j_th = (lambda / T) N (Phi + Psi) N^T` bounds the steady-state false-alarm rate by
/// `1 / lambda` (Markov inequality). When no training instances exist the quadratic form is
/// identically zero, so a floor `(lambda / T) eps ||N||^2` from the ridge term is kept alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub j_th: f64,
    pub lambda: f64,
    pub t: usize,
    pub floor: f64,
}

impl Threshold {
    /// Value the detector compares `J` against.
    pub fn effective(&self) -> f64 {
        self.j_th.max(self.floor)
    }

    /// Same filter and training data at another Markov factor; both terms scale with `lambda`.
    pub fn at_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 1.0) {
            return Err(Error::InvalidParameter { field: "lambda", reason: format!("must be >= 1, got {lambda}") });
        }
        let s = lambda / self.lambda;
        Ok(Self { j_th: self.j_th * s, lambda, t: self.t, floor: self.floor * s })
    }

    /// Asymptotic false-alarm bound `1 / lambda`.
    pub fn false_alarm_bound(&self) -> f64 {
        1.0 / self.lambda
    }
}

pub fn compute_threshold(filter: &FilterCoefficients, sig: &SignatureMatrix, lambda: f64, t: usize) -> Result<Threshold> {
    if !(lambda.is_finite() && lambda >= 1.0) {
        return Err(Error::InvalidParameter { field: "lambda", reason: format!("must be >= 1, got {lambda}") });
    }
    if t == 0 {
        return Err(Error::InvalidParameter { field: "T", reason: "must be > 0".into() });
    }
    let scale = lambda / t as f64;
    let j_th = (scale * filter.quadratic(&sig.total())).max(0.0);
    let floor = if sig.is_empty() {
        let norm2: f64 = filter.n_bar.iter().map(|v| v * v).sum();
        scale * filter.ridge * norm2
    } else {
        0.0
    };
    Ok(Threshold { j_th, lambda, t, floor })
}

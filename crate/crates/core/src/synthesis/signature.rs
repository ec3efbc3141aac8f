//! Signature matrices: Gram matrices whose quadratic form in `N_bar` equals the residual
//! energy an instance of model mismatch or disturbance produces.

use rayon::prelude::*;

use crate::dae::StackedDae;
use crate::error::{Error, Result};
use crate::linalg::Mat;

use super::Denominator;

/// `Gamma` with rows `l_bar_0 .. l_bar_{T-d_N}`; row `j` is the impulse response delayed by `j`.
pub fn build_gamma(ell: &[f64], t: usize, d_n: usize) -> Result<Mat> {
    if t <= d_n + 1 {
        return Err(Error::InvalidParameter {
            field: "T",
            reason: format!("instance length T = {t} must exceed d_N + 1 = {}", d_n + 1),
        });
    }
    if ell.len() < t + 1 {
        return Err(Error::Dimension(format!("impulse response has {} samples, need {}", ell.len(), t + 1)));
    }
    let rows = t - d_n + 1;
    let mut gamma = Mat::zeros(rows, t + 1);
    for j in 0..rows {
        for k in j..=t {
            gamma[(j, k)] = ell[k - j];
        }
    }
    Ok(gamma)
}

/// Block-Hankel matrix with block row `s` holding `v(s), ..., v(T - d_N + s)`.
pub fn block_hankel(instance: &Mat, d_n: usize) -> Mat {
    let (len, nc) = instance.shape();
    let cols = len - d_n;
    let mut xi = Mat::zeros((d_n + 1) * nc, cols);
    for s in 0..=d_n {
        for j in 0..cols {
            for c in 0..nc {
                xi[(s * nc + c, j)] = instance[(j + s, c)];
            }
        }
    }
    xi
}

/// `Phi_i = (Bbar Xi Gamma)(Bbar Xi Gamma)^T` for an instance stored as `(T + 1) x channels`.
pub fn signature_instance(instance: &Mat, blockdiag: &Mat, gamma: &Mat, d_n: usize) -> Result<Mat> {
    let t = gamma.ncols() - 1;
    if instance.nrows() != t + 1 {
        return Err(Error::Dimension(format!("instance has {} samples, expected T + 1 = {}", instance.nrows(), t + 1)));
    }
    if blockdiag.ncols() != (d_n + 1) * instance.ncols() {
        return Err(Error::Dimension(format!(
            "block-diagonal factor has {} columns, instance needs {}",
            blockdiag.ncols(),
            (d_n + 1) * instance.ncols()
        )));
    }
    let r = blockdiag * block_hankel(instance, d_n) * gamma;
    Ok(&r * r.transpose())
}

/// `xi_bar = [xi; 0]`: output discrepancy padded with zeros in the input slots.
pub fn pad_output_discrepancy(xi: &Mat, n_u: usize) -> Mat {
    let (len, ny) = xi.shape();
    let mut out = Mat::zeros(len, ny + n_u);
    out.view_mut((0, 0), (len, ny)).copy_from(xi);
    out
}

/// Averaged signature matrices `Phi_bar` and `Psi_bar`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureMatrix {
    pub phi_bar: Mat,
    pub psi_bar: Mat,
    /// Instance counts for the mismatch and disturbance sets.
    pub m: (usize, usize),
    pub t: usize,
}

impl SignatureMatrix {
    pub fn zeros(n: usize, t: usize) -> Self {
        Self { phi_bar: Mat::zeros(n, n), psi_bar: Mat::zeros(n, n), m: (0, 0), t }
    }

    pub fn total(&self) -> Mat {
        &self.phi_bar + &self.psi_bar
    }

    /// True when no instance contributed, as in the perfectly decoupled setting.
    pub fn is_empty(&self) -> bool {
        self.m == (0, 0)
    }

    /// Smallest eigenvalue of the symmetric total, for PSD diagnostics.
    pub fn min_eigenvalue(m: &Mat) -> f64 {
        let ev = Self::eigenvalues(m);
        ev.iter().copied().fold(if ev.len() < m.nrows() { 0.0 } else { f64::INFINITY }, f64::min)
    }

    /// Largest eigenvalue magnitude of a symmetric matrix.
    pub fn spectral_radius(m: &Mat) -> f64 {
        Self::eigenvalues(m).iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Eigenvalues of the principal block on the rows that are not identically zero. The
    /// remaining eigenvalues are exactly zero. Signature matrices are mostly zero rows, and
    /// the dense symmetric QR iteration fails to converge on them unless they are removed.
    fn eigenvalues(m: &Mat) -> Vec<f64> {
        let keep: Vec<usize> = (0..m.nrows()).filter(|&r| m.row(r).iter().any(|v| *v != 0.0)).collect();
        if keep.is_empty() {
            return Vec::new();
        }
        let block = Mat::from_fn(keep.len(), keep.len(), |i, j| 0.5 * (m[(keep[i], keep[j])] + m[(keep[j], keep[i])]));
        block.symmetric_eigenvalues().iter().copied().collect()
    }
}

fn mean_of(instances: &[Mat], blockdiag: &Mat, gamma: &Mat, d_n: usize, n: usize) -> Result<Mat> {
    if instances.is_empty() {
        return Ok(Mat::zeros(n, n));
    }
    let parts: Vec<Mat> = instances
        .par_iter()
        .map(|inst| signature_instance(inst, blockdiag, gamma, d_n))
        .collect::<Result<_>>()?;
    // fixed summation order
    let mut acc = Mat::zeros(n, n);
    for p in &parts {
        acc += p;
    }
    Ok(acc / instances.len() as f64)
}

/// Average per-instance signatures. `xi` instances hold `(T + 1) x n_y` output discrepancies,
/// `d_check` instances hold `(T + 1) x (n_d - 1)` non-decoupled disturbance samples.
pub fn average_signature(
    xi: &[Mat],
    d_check: &[Mat],
    stacked: &StackedDae,
    denominator: &Denominator,
    t: usize,
) -> Result<SignatureMatrix> {
    let n = stacked.n_coeffs();
    for inst in xi.iter().chain(d_check) {
        if inst.nrows() != t + 1 {
            return Err(Error::Dimension(format!("instance length {} differs from T + 1 = {}", inst.nrows(), t + 1)));
        }
    }
    if xi.is_empty() && d_check.is_empty() {
        return Ok(SignatureMatrix::zeros(n, t));
    }
    let gamma = build_gamma(&denominator.impulse_response(t), t, stacked.d_n)?;
    let padded: Vec<Mat> = xi.iter().map(|x| pad_output_discrepancy(x, stacked.n_u)).collect();
    let phi_bar = mean_of(&padded, &stacked.lbar0, &gamma, stacked.d_n, n)?;
    let psi_bar = if stacked.e0.ncols() == 0 {
        Mat::zeros(n, n)
    } else {
        mean_of(d_check, &stacked.ebar0, &gamma, stacked.d_n, n)?
    };
    Ok(SignatureMatrix { phi_bar, psi_bar, m: (xi.len(), d_check.len()), t })
}

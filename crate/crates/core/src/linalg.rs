//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Rank tolerance `max(rows, cols) * eps * sigma_max`.
pub fn rank_tolerance(m: &Mat, sigma_max: f64) -> f64 {
    m.nrows().max(m.ncols()) as f64 * f64::EPSILON * sigma_max
}

fn singular_values(m: &Mat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Numerical rank from the singular values.
pub fn rank(m: &Mat) -> usize {
    let sv = singular_values(m);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    let tol = rank_tolerance(m, smax);
    sv.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis (as columns) of `{v : m v = 0}`.
pub fn null_space(m: &Mat) -> Mat {
    let (r, c) = m.shape();
    if c == 0 {
        return Mat::zeros(0, 0);
    }
    // Pad to at least square so that V is complete.
    let padded = if r < c {
        let mut p = Mat::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = if smax == 0.0 { 0.0 } else { rank_tolerance(m, smax) };
    let cols: Vec<Vector> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        Mat::zeros(c, 0)
    } else {
        Mat::from_columns(&cols)
    }
}

/// Orthonormal basis of `{n : n^T m = 0}`, the left null space.
pub fn left_null_space(m: &Mat) -> Mat {
    null_space(&m.transpose())
}

/// Solve `a x = b` for symmetric positive definite `a`, falling back to LU.
pub fn spd_solve(a: &Mat, b: &Mat) -> Result<Mat> {
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical("singular matrix in linear solve".into()))
}

/// `(A^T A)^{-1} A^T` for a full column rank `A`.
pub fn left_pseudo_inverse(a: &Mat) -> Result<Mat> {
    let r = rank(a);
    if r < a.ncols() {
        return Err(Error::RankDeficient { rank: r, expected: a.ncols() });
    }
    let at = a.transpose();
    spd_solve(&(&at * a), &at)
}

pub fn spectral_radius(a: &Mat) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Observability matrix `[C; CA; ...; CA^{n-1}]`.
pub fn observability_matrix(a: &Mat, c: &Mat) -> Mat {
    let n = a.nrows();
    let p = c.nrows();
    let mut out = Mat::zeros(p * n, n);
    let mut block = c.clone();
    for k in 0..n {
        out.view_mut((k * p, 0), (p, n)).copy_from(&block);
        block = &block * a;
    }
    out
}

/// Orthonormal basis (rows) of the observable subspace of `(a, c)`.
///
/// `a` is scaled by its largest entry first; scaling leaves the subspace unchanged and keeps
/// high powers of stiff continuous-time matrices representable.
pub fn observable_basis(a: &Mat, c: &Mat) -> Mat {
    let scale = max_abs(a);
    let a_scaled = if scale > 0.0 { a / scale } else { a.clone() };
    let obs = observability_matrix(&a_scaled, c);
    let unobservable = null_space(&obs);
    let n = a.nrows();
    if unobservable.ncols() == 0 {
        return Mat::identity(n, n);
    }
    left_null_space(&unobservable).transpose()
}

/// Stack matrices with equal column counts vertically.
pub fn vstack(blocks: &[&Mat]) -> Mat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.view_mut((r, 0), b.shape()).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Stack matrices with equal row counts horizontally.
pub fn hstack(blocks: &[&Mat]) -> Mat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, c), b.shape()).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Block-diagonal matrix made of `count` copies of `block`.
pub fn block_diag_repeat(block: &Mat, count: usize) -> Mat {
    let (r, c) = block.shape();
    let mut out = Mat::zeros(r * count, c * count);
    for i in 0..count {
        out.view_mut((i * r, i * c), (r, c)).copy_from(block);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_outer_product() {
        let u = Vector::from_vec(vec![1.0, 2.0, 3.0]);
        let m = &u * u.transpose();
        assert_eq!(rank(&m), 1);
        assert_eq!(rank(&Mat::zeros(3, 2)), 0);
    }

    #[test]
    fn null_space_is_orthonormal_and_annihilated() {
        let m = Mat::from_row_slice(2, 4, &[1.0, 2.0, 0.0, 1.0, 0.0, 1.0, 1.0, -1.0]);
        let z = null_space(&m);
        assert_eq!(z.ncols(), 2);
        assert!(max_abs(&(&m * &z)) < 1e-12);
        let gram = z.transpose() * &z;
        assert!(max_abs(&(gram - Mat::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn left_null_space_of_tall_matrix() {
        let m = Mat::from_row_slice(3, 1, &[1.0, 1.0, 0.0]);
        let n = left_null_space(&m);
        assert_eq!(n.ncols(), 2);
        assert!(max_abs(&(n.transpose() * &m)) < 1e-12);
    }

    #[test]
    fn pseudo_inverse_rejects_zero_column() {
        let a = Mat::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
        assert!(matches!(left_pseudo_inverse(&a), Err(Error::RankDeficient { rank: 1, expected: 2 })));
    }

    #[test]
    fn observable_basis_of_decoupled_integrator() {
        // second state never reaches the output
        let a = Mat::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, 0.0]);
        let c = Mat::from_row_slice(1, 2, &[1.0, 0.0]);
        let t = observable_basis(&a, &c);
        assert_eq!(t.nrows(), 1);
        assert!((t[(0, 0)].abs() - 1.0).abs() < 1e-12);
    }
}

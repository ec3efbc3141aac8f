//! Polynomial (DAE) form of the discrete unified model and the block-stacked matrices the
//! filter synthesis works with.
//!
//! With `X = [x; d_hat]` and `Y = [y; u]` the sampled model reads
//! `H(q, f) X + L(f) Y + E(f) d_check = 0`, `H(q, f) = q H_1 + H_0(f)`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::export::write_matrix_csv;
use crate::linalg::{block_diag_repeat, hstack, left_pseudo_inverse, rank, vstack, Mat};
use crate::model::{DiscreteModel, DisturbanceSplit};

#[derive(Debug, Clone)]
pub struct DaeSystem {
    pub h1: Mat,
    h0: [Mat; 2],
    l: [Mat; 2],
    pub e0: Mat,
    pub n_x: usize,
    pub n_y: usize,
    pub n_u: usize,
}

impl DaeSystem {
    pub fn h0(&self, faulty: bool) -> &Mat {
        &self.h0[faulty as usize]
    }

    pub fn l(&self, faulty: bool) -> &Mat {
        &self.l[faulty as usize]
    }

    /// `E(f)`; the fault short-circuits the disturbance so `E(1) = 0`.
    pub fn e(&self, faulty: bool) -> Mat {
        if faulty {
            Mat::zeros(self.e0.nrows(), self.e0.ncols())
        } else {
            self.e0.clone()
        }
    }

    pub fn l0(&self) -> &Mat {
        self.l(false)
    }

    pub fn l1(&self) -> &Mat {
        self.l(true)
    }

    /// Evaluate `H(q, f) = q H_1 + H_0(f)` at a scalar `q`.
    pub fn h_at(&self, q: f64, faulty: bool) -> Mat {
        &self.h1 * q + self.h0(faulty)
    }

    /// Rows of every DAE matrix: `n_x + n_y`.
    pub fn rows(&self) -> usize {
        self.n_x + self.n_y
    }

    /// Build from raw sampled matrices. `b_hat` / `b_check` are the mode's disturbance columns.
    pub fn from_parts(
        a: [&Mat; 2],
        b_u: [&Mat; 2],
        b_hat: [&Mat; 2],
        b_check_normal: &Mat,
        c: &Mat,
    ) -> Result<Self> {
        let n_x = a[0].nrows();
        let n_y = c.nrows();
        let n_u = b_u[0].ncols();
        for f in 0..2 {
            if a[f].shape() != (n_x, n_x) || b_u[f].shape() != (n_x, n_u) || b_hat[f].nrows() != n_x {
                return Err(Error::Dimension(format!("mode {f} matrices are inconsistent with n_x = {n_x}")));
            }
        }
        if c.ncols() != n_x || b_check_normal.nrows() != n_x {
            return Err(Error::Dimension("C or B_check has the wrong shape".into()));
        }
        if b_hat[0].ncols() != b_hat[1].ncols() {
            return Err(Error::Dimension("decoupled channel count differs between modes".into()));
        }
        let n_hat = b_hat[0].ncols();
        let mut h1 = Mat::zeros(n_x + n_y, n_x + n_hat);
        h1.view_mut((0, 0), (n_x, n_x)).copy_from(&(-Mat::identity(n_x, n_x)));
        let h0 = [0, 1].map(|f| {
            let top = hstack(&[a[f], b_hat[f]]);
            let bottom = hstack(&[c, &Mat::zeros(n_y, n_hat)]);
            vstack(&[&top, &bottom])
        });
        let l = [0, 1].map(|f| {
            let top = hstack(&[&Mat::zeros(n_x, n_y), b_u[f]]);
            let bottom = hstack(&[&(-Mat::identity(n_y, n_y)), &Mat::zeros(n_y, n_u)]);
            vstack(&[&top, &bottom])
        });
        let e0 = vstack(&[b_check_normal, &Mat::zeros(n_y, b_check_normal.ncols())]);
        Ok(Self { h1, h0, l, e0, n_x, n_y, n_u })
    }
}

/// Assemble `H_1`, `H_0(f)`, `L(f)` and `E_0` from the two sampled modes.
pub fn build_dae(normal: &DiscreteModel, faulty: &DiscreteModel, split: &DisturbanceSplit) -> Result<DaeSystem> {
    if normal.faulty || !faulty.faulty {
        return Err(Error::Dimension("expected (normal, faulty) models in that order".into()));
    }
    if normal.b_d.ncols() != faulty.b_d.ncols() || normal.b_d.ncols() != split.b_hat.ncols() + split.n_check() {
        return Err(Error::Dimension("disturbance channel count disagrees with the split".into()));
    }
    if normal.c != faulty.c {
        return Err(Error::Dimension("output matrices differ between modes".into()));
    }
    let (hat0, check0) = split.partition(&normal.b_d);
    let (hat1, _) = split.partition(&faulty.b_d);
    DaeSystem::from_parts([&normal.a, &faulty.a], [&normal.b_u, &faulty.b_u], [&hat0, &hat1], &check0, &normal.c)
}

/// Block-stacked matrices for a numerator of degree `d_N`.
#[derive(Debug, Clone)]
pub struct StackedDae {
    hbar: [Mat; 2],
    /// `diag(L_0 L_1^+, ...)` with `d_N + 1` blocks.
    pub lbar: Mat,
    /// `[I, ..., I]^T` with `d_N + 2` identity blocks.
    pub ibar: Mat,
    pub lbar0: Mat,
    pub ebar0: Mat,
    pub l0: Mat,
    pub e0: Mat,
    pub l1_pinv: Mat,
    pub d_n: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub n_u: usize,
    /// `Hbar(0) Ibar`; the decoupling constraint is `N G_0 = 0`.
    pub g0: Mat,
    /// `Lbar Hbar(1) Ibar`; its image under `N` measures fault sensitivity.
    pub g1: Mat,
}

impl StackedDae {
    pub fn hbar(&self, faulty: bool) -> &Mat {
        &self.hbar[faulty as usize]
    }

    /// Length of `N_bar`: `(d_N + 1)(n_x + n_y)`.
    pub fn n_coeffs(&self) -> usize {
        (self.d_n + 1) * (self.n_x + self.n_y)
    }

    /// Number of sensitivity directions, the columns of `G_1`.
    pub fn n_directions(&self) -> usize {
        self.g1.ncols()
    }

    /// Write every stacked matrix as CSV into `dir`.
    pub fn dump_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let items: [(&str, &Mat); 10] = [
            ("hbar0", &self.hbar[0]),
            ("hbar1", &self.hbar[1]),
            ("lbar", &self.lbar),
            ("ibar", &self.ibar),
            ("lbar0", &self.lbar0),
            ("ebar0", &self.ebar0),
            ("l1_pinv", &self.l1_pinv),
            ("g0", &self.g0),
            ("g1", &self.g1),
            ("l0", &self.l0),
        ];
        for (name, m) in items {
            write_matrix_csv(&dir.join(format!("{name}.csv")), m)?;
        }
        Ok(())
    }
}

fn stack_h(h0: &Mat, h1: &Mat, d_n: usize) -> Mat {
    let (r, c) = h0.shape();
    let mut out = Mat::zeros((d_n + 1) * r, (d_n + 2) * c);
    for i in 0..=d_n {
        out.view_mut((i * r, i * c), (r, c)).copy_from(h0);
        out.view_mut((i * r, (i + 1) * c), (r, c)).copy_from(h1);
    }
    out
}

pub fn stack_matrices(dae: &DaeSystem, d_n: usize) -> Result<StackedDae> {
    let l1_pinv = left_pseudo_inverse(dae.l1())?;
    let hbar = [stack_h(dae.h0(false), &dae.h1, d_n), stack_h(dae.h0(true), &dae.h1, d_n)];
    let cols = dae.h1.ncols();
    let ibar = vstack(&vec![&Mat::identity(cols, cols); d_n + 2]);
    let lbar = block_diag_repeat(&(dae.l0() * &l1_pinv), d_n + 1);
    let g0 = &hbar[0] * &ibar;
    let g1 = &lbar * &hbar[1] * &ibar;
    Ok(StackedDae {
        lbar0: block_diag_repeat(dae.l0(), d_n + 1),
        ebar0: block_diag_repeat(&dae.e0, d_n + 1),
        l0: dae.l0().clone(),
        e0: dae.e0.clone(),
        hbar,
        lbar,
        ibar,
        l1_pinv,
        d_n,
        n_x: dae.n_x,
        n_y: dae.n_y,
        n_u: dae.n_u,
        g0,
        g1,
    })
}

/// Rank/nullity of the decoupling constraint and whether fault sensitivity is attainable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeasibilityReport {
    /// `rank(Hbar(0) Ibar)`.
    pub rank_h0i: usize,
    /// Dimension of the left null space of `Hbar(0) Ibar`.
    pub null_dim: usize,
    /// `rank([Hbar(0) Ibar, Lbar Hbar(1) Ibar])`.
    pub rank_augmented: usize,
    pub equality_feasible: bool,
    pub sensitivity_possible: bool,
}

impl std::fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "rank_H0I={} null_dim={} rank_augmented={} equality_feasible={} sensitivity_possible={}",
            self.rank_h0i, self.null_dim, self.rank_augmented, self.equality_feasible, self.sensitivity_possible
        )
    }
}

pub fn feasibility_check(stacked: &StackedDae) -> FeasibilityReport {
    feasibility_of(&stacked.g0, &stacked.g1)
}

/// Feasibility of `N g0 = 0` with `N g1 != 0`.
pub fn feasibility_of(g0: &Mat, g1: &Mat) -> FeasibilityReport {
    let rank_h0i = rank(g0);
    let null_dim = g0.nrows() - rank_h0i;
    let rank_augmented = rank(&hstack(&[g0, g1]));
    FeasibilityReport {
        rank_h0i,
        null_dim,
        rank_augmented,
        equality_feasible: null_dim > 0,
        sensitivity_possible: rank_augmented > rank_h0i,
    }
}

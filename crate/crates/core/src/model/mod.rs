//! Continuous-time state-space models of the inverter-based microgrid in normal and
//! ground-fault modes.
//!
//! State ordering is `x = [phi_dq, gamma_dq, i_ldq, v_odq, i_odq]`, the output is `i_odq` and
//! the known input is `u = [v_o_ref; tau_dq]`.

pub mod discrete;
pub mod dq;

pub use discrete::{discretize, DiscreteModel, Discretization};
pub use dq::{dq_transform, frame_angle, inverse_dq_transform};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hstack, Mat};
use crate::params::{MicrogridParams, NU, NX, NY};

/// Sub-models of the voltage controller, current controller and LCL filter.
#[derive(Debug, Clone)]
pub struct ComponentBlocks {
    pub b_v1: Mat,
    pub b_v2: Mat,
    pub c_v: Mat,
    pub d_v1: Mat,
    pub d_v2: Mat,
    pub b_c1: Mat,
    pub b_c2: Mat,
    pub c_c: Mat,
    pub d_c1: Mat,
    pub d_c2: Mat,
    pub a_l: Mat,
    pub b_l1: Mat,
    pub b_l2: Mat,
}

impl ComponentBlocks {
    pub fn new(p: &MicrogridParams) -> Self {
        let w = p.omega;
        let eye2 = Mat::identity(2, 2);
        let wcf = w * p.c_f;
        let wlf = w * p.l_f;
        #[rustfmt::skip]
        let b_v2 = Mat::from_row_slice(2, 6, &[
            0.0, 0.0, -1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, -1.0, 0.0, 0.0,
        ]);
        #[rustfmt::skip]
        let d_v2 = Mat::from_row_slice(2, 6, &[
            0.0, 0.0, -p.kp_voltage, -wcf, p.feedforward, 0.0,
            0.0, 0.0, wcf, -p.kp_voltage, 0.0, p.feedforward,
        ]);
        #[rustfmt::skip]
        let b_c2 = Mat::from_row_slice(2, 6, &[
            -1.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.0, -1.0, 0.0, 0.0, 0.0, 0.0,
        ]);
        #[rustfmt::skip]
        let d_c2 = Mat::from_row_slice(2, 6, &[
            -p.kp_current, -wlf, 0.0, 0.0, 0.0, 0.0,
            wlf, -p.kp_current, 0.0, 0.0, 0.0, 0.0,
        ]);
        let (rf, lf, cf, rc, lc) = (p.r_f, p.l_f, p.c_f, p.r_c, p.l_c);
        #[rustfmt::skip]
        let a_l = Mat::from_row_slice(6, 6, &[
            -rf / lf, w, -1.0 / lf, 0.0, 0.0, 0.0,
            -w, -rf / lf, 0.0, -1.0 / lf, 0.0, 0.0,
            1.0 / cf, 0.0, 0.0, w, -1.0 / cf, 0.0,
            0.0, 1.0 / cf, -w, 0.0, 0.0, -1.0 / cf,
            0.0, 0.0, 1.0 / lc, 0.0, -rc / lc, w,
            0.0, 0.0, 0.0, 1.0 / lc, -w, -rc / lc,
        ]);
        let mut b_l1 = Mat::zeros(6, 2);
        b_l1[(0, 0)] = 1.0 / lf;
        b_l1[(1, 1)] = 1.0 / lf;
        let mut b_l2 = Mat::zeros(6, 2);
        b_l2[(4, 0)] = -1.0 / lc;
        b_l2[(5, 1)] = -1.0 / lc;
        Self {
            b_v1: eye2.clone(),
            b_v2,
            c_v: &eye2 * p.ki_voltage,
            d_v1: &eye2 * p.kp_voltage,
            d_v2,
            b_c1: eye2.clone(),
            b_c2,
            c_c: &eye2 * p.ki_current,
            d_c1: &eye2 * p.kp_current,
            d_c2,
            a_l,
            b_l1,
            b_l2,
        }
    }
}

/// Continuous-time model `x' = A x + B_u u + B_d d`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousModel {
    pub a: Mat,
    pub b_u: Mat,
    pub b_d: Mat,
    pub c: Mat,
    pub faulty: bool,
}

impl ContinuousModel {
    pub fn n_d(&self) -> usize {
        self.b_d.ncols()
    }
}

/// `C = [0_{2x8} I]`, measuring the output current.
pub fn output_matrix() -> Mat {
    let mut c = Mat::zeros(NY, NX);
    c[(0, 8)] = 1.0;
    c[(1, 9)] = 1.0;
    c
}

/// Load-change disturbance channels: `-1/L_c` on the `i_odq` rows.
pub fn load_disturbance_matrix(p: &MicrogridParams) -> Mat {
    let mut b = Mat::zeros(NX, 2);
    b[(8, 0)] = -1.0 / p.l_c;
    b[(9, 1)] = -1.0 / p.l_c;
    b
}

/// Single fully decoupled channel `[0_{1x8} [1 1]]^T` used for the perfect-setting study.
pub fn perfect_disturbance_matrix() -> Mat {
    let mut b = Mat::zeros(NX, 1);
    b[(8, 0)] = 1.0;
    b[(9, 0)] = 1.0;
    b
}

fn assemble(rows: [[&Mat; 3]; 3]) -> Mat {
    let r: Vec<Mat> = rows.iter().map(|row| hstack(row)).collect();
    crate::linalg::vstack(&[&r[0], &r[1], &r[2]])
}

struct NormalParts {
    a_h: Mat,
    b_h: Mat,
}

struct FaultyParts {
    a_uh: Mat,
    b_uh1: Mat,
    b_uh2: Mat,
}

fn normal_parts(p: &MicrogridParams) -> NormalParts {
    let k = ComponentBlocks::new(p);
    let z22 = Mat::zeros(2, 2);
    let mut load_select = Mat::zeros(2, 6);
    load_select[(0, 4)] = 1.0;
    load_select[(1, 5)] = 1.0;
    let a_h33 = &k.a_l
        + &k.b_l1 * (&k.d_c1 * &k.d_v2 + &k.d_c2)
        + &k.b_l2 * (Mat::identity(2, 2) * p.r_load) * &load_select;
    let a_h = assemble([
        [&z22, &z22, &k.b_v2],
        [&(&k.b_c1 * &k.c_v), &z22, &(&k.b_c1 * &k.d_v2 + &k.b_c2)],
        [&(&k.b_l1 * &k.d_c1 * &k.c_v), &(&k.b_l1 * &k.c_c), &a_h33],
    ]);
    let b_h = crate::linalg::vstack(&[&k.b_v1, &(&k.b_c1 * &k.d_v1), &(&k.b_l1 * &k.d_c1 * &k.d_v1)]);
    NormalParts { a_h, b_h }
}

fn faulty_parts(p: &MicrogridParams) -> FaultyParts {
    let k = ComponentBlocks::new(p);
    let z22 = Mat::zeros(2, 2);
    let z62 = Mat::zeros(6, 2);
    let a_uh = assemble([
        [&z22, &z22, &k.b_v2],
        [&z22, &z22, &k.b_c2],
        [&z62, &(&k.b_l1 * &k.c_c), &(&k.a_l + &k.b_l1 * &k.d_c2)],
    ]);
    let b_uh1 = crate::linalg::vstack(&[&k.b_v1, &z22, &z62]);
    let b_uh2 = crate::linalg::vstack(&[&z22, &k.b_c1, &(&k.b_l1 * &k.d_c1)]);
    FaultyParts { a_uh, b_uh1, b_uh2 }
}

/// Fault-free model. The limiter input columns of `B_u` are zero.
pub fn build_normal_model(p: &MicrogridParams) -> Result<ContinuousModel> {
    p.validate()?;
    let NormalParts { a_h, b_h } = normal_parts(p);
    Ok(ContinuousModel {
        a: a_h,
        b_u: hstack(&[&b_h, &Mat::zeros(NX, 2)]),
        b_d: load_disturbance_matrix(p),
        c: output_matrix(),
        faulty: false,
    })
}

/// Ground-fault model: bus voltage shorted, current reference pinned to `tau_dq`,
/// load disturbance has no path into the plant.
pub fn build_faulty_model(p: &MicrogridParams) -> Result<ContinuousModel> {
    p.validate()?;
    let FaultyParts { a_uh, b_uh1, b_uh2 } = faulty_parts(p);
    Ok(ContinuousModel {
        a: a_uh,
        b_u: hstack(&[&b_uh1, &b_uh2]),
        b_d: Mat::zeros(NX, 2),
        c: output_matrix(),
        faulty: true,
    })
}

/// Unified model with the default load-disturbance channels.
pub fn unified_model(p: &MicrogridParams, faulty: bool) -> Result<ContinuousModel> {
    unified_model_with(p, &load_disturbance_matrix(p), faulty)
}

/// `A(f) = A_h + f (A_uh - A_h)`, `B_u(f) = [B_h + f (B_uh1 - B_h), f B_uh2]`,
/// `B_d(f) = (1 - f) B_d`.
pub fn unified_model_with(p: &MicrogridParams, b_d: &Mat, faulty: bool) -> Result<ContinuousModel> {
    p.validate()?;
    if b_d.nrows() != NX {
        return Err(Error::Dimension(format!("B_d must have {NX} rows, got {}", b_d.nrows())));
    }
    let f = if faulty { 1.0 } else { 0.0 };
    let n = normal_parts(p);
    let fp = faulty_parts(p);
    // f is 0 or 1; pick the endpoints directly so they match the mode models bit for bit
    let (a, b_u) = if faulty {
        (fp.a_uh, hstack(&[&fp.b_uh1, &fp.b_uh2]))
    } else {
        (n.a_h, hstack(&[&n.b_h, &Mat::zeros(NX, 2)]))
    };
    debug_assert_eq!(b_u.ncols(), NU);
    Ok(ContinuousModel { a, b_u, b_d: b_d * (1.0 - f), c: output_matrix(), faulty })
}

/// Which physical channels the exogenous disturbance enters through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceChannels {
    /// Two load-change channels on the `i_odq` dynamics.
    #[default]
    Load,
    /// One channel that can be fully decoupled (perfect setting).
    Perfect,
}

impl DisturbanceChannels {
    pub fn matrix(&self, p: &MicrogridParams) -> Mat {
        match self {
            DisturbanceChannels::Load => load_disturbance_matrix(p),
            DisturbanceChannels::Perfect => perfect_disturbance_matrix(),
        }
    }

    pub fn count(&self) -> usize {
        match self {
            DisturbanceChannels::Load => 2,
            DisturbanceChannels::Perfect => 1,
        }
    }
}

/// Sampled normal and faulty modes built from one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPair {
    pub normal: DiscreteModel,
    pub faulty: DiscreteModel,
}

impl ModelPair {
    pub fn build(p: &MicrogridParams, channels: DisturbanceChannels, method: Discretization) -> Result<Self> {
        let b_d = channels.matrix(p);
        Ok(Self {
            normal: discretize(&unified_model_with(p, &b_d, false)?, p.ts, method)?,
            faulty: discretize(&unified_model_with(p, &b_d, true)?, p.ts, method)?,
        })
    }

    pub fn mode(&self, faulty: bool) -> &DiscreteModel {
        if faulty {
            &self.faulty
        } else {
            &self.normal
        }
    }
}

/// Column partition of `B_d` into a decoupled channel and the non-decoupled rest.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSplit {
    pub b_hat: Mat,
    pub b_check: Mat,
    pub decoupled: usize,
}

impl DisturbanceSplit {
    pub fn n_check(&self) -> usize {
        self.b_check.ncols()
    }

    /// Apply the same column partition to another matrix with `B_d`'s column layout.
    pub fn partition(&self, b: &Mat) -> (Mat, Mat) {
        partition_columns(b, self.decoupled)
    }
}

fn partition_columns(b: &Mat, decoupled: usize) -> (Mat, Mat) {
    let hat = b.columns(decoupled, 1).into_owned();
    let rest: Vec<_> = (0..b.ncols()).filter(|&j| j != decoupled).map(|j| b.column(j).into_owned()).collect();
    let check = if rest.is_empty() { Mat::zeros(b.nrows(), 0) } else { Mat::from_columns(&rest) };
    (hat, check)
}

/// Split `B_d` given zero-based decoupled column indices.
///
/// With `n_y = 2` sensors at most one disturbance channel can be decoupled.
pub fn split_disturbance(b_d: &Mat, decoupled_cols: &[usize]) -> Result<DisturbanceSplit> {
    if decoupled_cols.len() >= NY {
        return Err(Error::Infeasible(format!(
            "{} decoupled channels requested; decoupling requires fewer unknown inputs than the {NY} sensors",
            decoupled_cols.len()
        )));
    }
    let &[col] = decoupled_cols else {
        return Err(Error::Dimension("exactly one decoupled channel expected".into()));
    };
    if col >= b_d.ncols() {
        return Err(Error::Dimension(format!("decoupled column {col} out of range for {} columns", b_d.ncols())));
    }
    let (b_hat, b_check) = partition_columns(b_d, col);
    Ok(DisturbanceSplit { b_hat, b_check, decoupled: col })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, observable_basis, rank};

    fn block(m: &Mat, r: usize, c: usize, h: usize, w: usize) -> Mat {
        m.view((r, c), (h, w)).into_owned()
    }

    #[test]
    fn normal_model_shapes_and_output() {
        let m = build_normal_model(&MicrogridParams::default()).unwrap();
        assert_eq!(m.a.shape(), (NX, NX));
        assert_eq!(m.b_u.shape(), (NX, NU));
        assert_eq!(m.c[(0, 8)], 1.0);
        assert_eq!(m.c.row(0).iter().filter(|v| **v != 0.0).count(), 1);
        let mut c = Mat::zeros(NY, NX);
        c.view_mut((0, 8), (2, 2)).copy_from(&Mat::identity(2, 2));
        assert_eq!(m.c, c);
        assert_eq!(m.b_d[(8, 0)], -1.0 / 1.3e-3);
        assert!(max_abs(&m.b_u.columns(2, 2).into_owned()) == 0.0);
    }

    #[test]
    fn a_h_blocks_match_component_formula() {
        let p = MicrogridParams::default();
        let k = ComponentBlocks::new(&p);
        let a = build_normal_model(&p).unwrap().a;
        assert_eq!(block(&a, 0, 4, 2, 6), k.b_v2);
        assert_eq!(block(&a, 2, 0, 2, 2), &k.b_c1 * &k.c_v);
        assert_eq!(block(&a, 4, 2, 6, 2), &k.b_l1 * &k.c_c);
    }

    #[test]
    fn load_resistance_only_touches_lcl_block() {
        let p = MicrogridParams::default();
        let q = MicrogridParams { r_load: 24.0, ..p.clone() };
        let d = build_normal_model(&q).unwrap().a - build_normal_model(&p).unwrap().a;
        let mut outside = d.clone();
        outside.view_mut((4, 4), (6, 6)).fill(0.0);
        assert_eq!(max_abs(&outside), 0.0);
        assert!(max_abs(&block(&d, 4, 4, 6, 6)) > 0.0);
    }

    #[test]
    fn normal_model_is_stable() {
        let a = build_normal_model(&MicrogridParams::default()).unwrap().a;
        for z in a.complex_eigenvalues().iter() {
            assert!(z.re < 0.0, "eigenvalue {z}");
        }
    }

    #[test]
    fn faulty_model_blocks() {
        let p = MicrogridParams::default();
        let m = build_faulty_model(&p).unwrap();
        assert_eq!(block(&m.b_u, 0, 0, 2, 2), Mat::identity(2, 2));
        assert_eq!(max_abs(&block(&m.b_u, 0, 2, 2, 2)), 0.0);
        assert_eq!(max_abs(&m.b_d), 0.0);
    }

    #[test]
    fn faulty_model_is_not_observable() {
        let m = build_faulty_model(&MicrogridParams::default()).unwrap();
        let basis = observable_basis(&m.a, &m.c);
        assert!(basis.nrows() < NX);
        let scaled = &m.a / max_abs(&m.a);
        assert!(rank(&crate::linalg::observability_matrix(&scaled, &m.c)) < NX);
    }

    #[test]
    fn unified_endpoints() {
        let p = MicrogridParams::default();
        assert_eq!(unified_model(&p, false).unwrap(), build_normal_model(&p).unwrap());
        assert_eq!(unified_model(&p, true).unwrap(), build_faulty_model(&p).unwrap());
        assert_eq!(max_abs(&unified_model(&p, true).unwrap().b_d), 0.0);
    }

    #[test]
    fn unified_is_affine_in_fault_flag() {
        let p = MicrogridParams::default();
        let n = unified_model(&p, false).unwrap();
        let f = unified_model(&p, true).unwrap();
        for faulty in [false, true] {
            let w = if faulty { 1.0 } else { 0.0 };
            let expect = &n.a * (1.0 - w) + &f.a * w;
            assert_eq!(unified_model(&p, faulty).unwrap().a, expect);
        }
    }

    #[test]
    fn invalid_params_name_the_field() {
        let p = MicrogridParams { l_f: -1.0, ..Default::default() };
        assert!(matches!(build_normal_model(&p), Err(Error::InvalidParameter { field: "L_f", .. })));
        assert!(matches!(build_faulty_model(&p), Err(Error::InvalidParameter { field: "L_f", .. })));
    }

    #[test]
    fn split_two_channels() {
        let b = load_disturbance_matrix(&MicrogridParams::default());
        let s = split_disturbance(&b, &[0]).unwrap();
        assert_eq!(s.b_hat, b.columns(0, 1).into_owned());
        assert_eq!(s.b_check, b.columns(1, 1).into_owned());
        assert_eq!(hstack(&[&s.b_hat, &s.b_check]), b);
    }

    #[test]
    fn split_perfect_setting() {
        let b = perfect_disturbance_matrix();
        let s = split_disturbance(&b, &[0]).unwrap();
        assert_eq!(s.b_hat, b);
        assert_eq!(s.b_check.ncols(), 0);
    }

    #[test]
    fn split_rejects_two_decoupled_channels() {
        let b = load_disturbance_matrix(&MicrogridParams::default());
        assert!(matches!(split_disturbance(&b, &[0, 1]), Err(Error::Infeasible(_))));
        assert!(split_disturbance(&b, &[5]).is_err());
    }
}

//! Physical and controller constants of the microgrid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of states of the augmented microgrid model.
pub const NX: usize = 10;
/// Number of measured outputs (`i_od`, `i_oq`).
pub const NY: usize = 2;
/// Number of known inputs (`v_o_ref` and `tau_dq`).
pub const NU: usize = 4;

/// Inverter, LCL filter, load and controller constants.
///
/// Field names in config files follow the usual symbols (`L_f`, `K_P_c`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MicrogridParams {
    /// Grid angular frequency (rad/s).
    pub omega: f64,
    #[serde(rename = "L_f")]
    pub l_f: f64,
    #[serde(rename = "R_f")]
    pub r_f: f64,
    #[serde(rename = "C_f")]
    pub c_f: f64,
    #[serde(rename = "L_c")]
    pub l_c: f64,
    #[serde(rename = "R_c")]
    pub r_c: f64,
    #[serde(rename = "R_L")]
    pub r_load: f64,
    #[serde(rename = "K_P_c")]
    pub kp_current: f64,
    #[serde(rename = "K_I_c")]
    pub ki_current: f64,
    #[serde(rename = "K_P_v")]
    pub kp_voltage: f64,
    #[serde(rename = "K_I_v")]
    pub ki_voltage: f64,
    /// Output-current feedforward gain of the voltage controller.
    #[serde(rename = "F")]
    pub feedforward: f64,
    /// dq reference of the grid-side voltage (V).
    pub v_o_ref: [f64; 2],
    /// Current reference the fault current limiter pins to during a fault.
    pub tau_dq: [f64; 2],
    /// Sampling period (s).
    #[serde(rename = "Ts")]
    pub ts: f64,
}

impl Default for MicrogridParams {
    fn default() -> Self {
        Self {
            omega: 314.1,
            l_f: 3.5e-3,
            r_f: 0.01,
            c_f: 21.9e-6,
            l_c: 1.3e-3,
            r_c: 0.02,
            r_load: 12.0,
            kp_current: 0.3,
            ki_current: 20.0,
            kp_voltage: 2.0,
            ki_voltage: 14.0,
            feedforward: 0.75,
            v_o_ref: [381.0, 0.0],
            tau_dq: [35.0, 0.7],
            ts: 1e-4,
        }
    }
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { field, reason: format!("must be finite and > 0, got {value}") })
    }
}

fn finite(field: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::InvalidParameter { field, reason: format!("must be finite, got {v}") }),
        None => Ok(()),
    }
}

impl MicrogridParams {
    pub fn validate(&self) -> Result<()> {
        positive("omega", self.omega)?;
        positive("L_f", self.l_f)?;
        positive("C_f", self.c_f)?;
        positive("L_c", self.l_c)?;
        positive("R_L", self.r_load)?;
        positive("Ts", self.ts)?;
        finite("R_f", &[self.r_f])?;
        finite("R_c", &[self.r_c])?;
        if self.r_f < 0.0 {
            return Err(Error::InvalidParameter { field: "R_f", reason: "must be >= 0".into() });
        }
        if self.r_c < 0.0 {
            return Err(Error::InvalidParameter { field: "R_c", reason: "must be >= 0".into() });
        }
        finite("K_P_c", &[self.kp_current])?;
        finite("K_I_c", &[self.ki_current])?;
        finite("K_P_v", &[self.kp_voltage])?;
        finite("K_I_v", &[self.ki_voltage])?;
        finite("F", &[self.feedforward])?;
        finite("v_o_ref", &self.v_o_ref)?;
        finite("tau_dq", &self.tau_dq)?;
        Ok(())
    }

    /// Known input `u = [v_o_ref; tau_dq * f]`; the limiter reference only acts in fault mode.
    pub fn input(&self, faulty: bool) -> [f64; NU] {
        let g = if faulty { 1.0 } else { 0.0 };
        [self.v_o_ref[0], self.v_o_ref[1], g * self.tau_dq[0], g * self.tau_dq[1]]
    }

    /// Steady input `[v_o_ref; tau_dq]` seen by the plant after a ground fault.
    pub fn fault_input(&self) -> [f64; NU] {
        self.input(true)
    }
}

/// Augmented state `[phi_dq, gamma_dq, i_ldq, v_odq, i_odq]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector {
    pub phi_dq: [f64; 2],
    pub gamma_dq: [f64; 2],
    pub i_ldq: [f64; 2],
    pub v_odq: [f64; 2],
    pub i_odq: [f64; 2],
}

impl StateVector {
    /// Initial conditions listed with the reference parameter set.
    ///
    /// `i_lq = -5.5e3` is kept as listed even though it is three orders of magnitude
    /// off the other currents; prefer a steady-state warm start for experiments.
    pub fn reference_point() -> Self {
        Self {
            phi_dq: [0.13, 0.0],
            gamma_dq: [0.0115, 0.0],
            i_ldq: [11.4, -5.5e3],
            v_odq: [380.8, 0.0],
            i_odq: [11.4, 0.4],
        }
    }

    pub fn to_array(&self) -> [f64; NX] {
        let mut out = [0.0; NX];
        for (i, pair) in [self.phi_dq, self.gamma_dq, self.i_ldq, self.v_odq, self.i_odq].iter().enumerate() {
            out[2 * i] = pair[0];
            out[2 * i + 1] = pair[1];
        }
        out
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        if x.len() != NX {
            return Err(Error::Dimension(format!("state vector needs {NX} entries, got {}", x.len())));
        }
        Ok(Self {
            phi_dq: [x[0], x[1]],
            gamma_dq: [x[2], x[3]],
            i_ldq: [x[4], x[5]],
            v_odq: [x[6], x[7]],
            i_odq: [x[8], x[9]],
        })
    }
}

//! Closed-loop scenario simulation with fault injection, exogenous disturbances and a
//! perturbed-parameter surrogate plant, plus the training-instance generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::{split_disturbance, DisturbanceChannels, DisturbanceSplit, ModelPair};
use crate::params::{MicrogridParams, StateVector, NU, NX, NY};

/// One term `amplitude * sin(omega * k + phase)` of a load fluctuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineTerm {
    pub amplitude: f64,
    /// Radians per sample.
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Exogenous disturbance `d(k)`. Every kind is zero before `onset` and active for `k >= onset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisturbanceSpec {
    None,
    Step { value: Vec<f64>, onset: usize },
    /// Step whose value is drawn uniformly from `[lower, upper]` with the scenario seed.
    RandomStep { lower: Vec<f64>, upper: Vec<f64>, onset: usize },
    /// `offset + sum_i a_i sin(w_i k + psi_i)` on a single channel.
    Sinusoid { offset: f64, terms: Vec<SineTerm>, onset: usize },
}

impl DisturbanceSpec {
    /// Load fluctuation used with the fully decoupled channel. `large` selects the
    /// 0.2 / 0.3 / 0.2 amplitudes instead of 0.02 / 0.01 / 0.01.
    pub fn load_fluctuation(large: bool, onset: usize) -> Self {
        let amps = if large { [0.2, 0.3, 0.2] } else { [0.02, 0.01, 0.01] };
        let terms = amps
            .iter()
            .zip([30.0, 40.0, 60.0])
            .map(|(&amplitude, period)| SineTerm { amplitude, omega: 1.0 / period, phase: 0.0 })
            .collect();
        DisturbanceSpec::Sinusoid { offset: 0.8, terms, onset }
    }

    pub fn validate(&self, channels: DisturbanceChannels) -> Result<()> {
        let n_d = channels.count();
        match self {
            DisturbanceSpec::None => Ok(()),
            DisturbanceSpec::Step { value, .. } => check_len("disturbance.value", value, n_d),
            DisturbanceSpec::RandomStep { lower, upper, .. } => {
                check_len("disturbance.lower", lower, n_d)?;
                check_len("disturbance.upper", upper, n_d)?;
                check_bounds(lower, upper)
            }
            DisturbanceSpec::Sinusoid { offset, terms, .. } => {
                if channels != DisturbanceChannels::Perfect {
                    return Err(Error::Config(
                        "a sinusoidal disturbance needs the single decoupled channel (perfect setting)".into(),
                    ));
                }
                let finite = offset.is_finite() && terms.iter().all(|t| t.amplitude.is_finite() && t.omega.is_finite());
                if finite {
                    Ok(())
                } else {
                    Err(Error::Config("sinusoid coefficients must be finite".into()))
                }
            }
        }
    }

    /// Resolve random draws so the result can be sampled step by step.
    fn realize(&self, n_d: usize, rng: &mut impl Rng) -> Realized {
        match self {
            DisturbanceSpec::None => Realized::Constant { value: vec![0.0; n_d], onset: 0 },
            DisturbanceSpec::Step { value, onset } => Realized::Constant { value: value.clone(), onset: *onset },
            DisturbanceSpec::RandomStep { lower, upper, onset } => {
                Realized::Constant { value: draw_uniform(lower, upper, rng), onset: *onset }
            }
            DisturbanceSpec::Sinusoid { offset, terms, onset } => {
                Realized::Sinusoid { offset: *offset, terms: terms.clone(), onset: *onset }
            }
        }
    }
}

fn check_len(field: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::Config(format!("{field} has {} entries, the disturbance has {n} channels", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("{field} must be finite")));
    }
    Ok(())
}

fn check_bounds(lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.is_empty() || lower.len() != upper.len() {
        return Err(Error::InvalidParameter { field: "bounds", reason: "empty or mismatched bounds".into() });
    }
    if let Some((l, u)) = lower.iter().zip(upper).find(|(l, u)| l > u || !l.is_finite() || !u.is_finite()) {
        return Err(Error::InvalidParameter { field: "bounds", reason: format!("empty interval [{l}, {u}]") });
    }
    Ok(())
}

fn draw_uniform(lower: &[f64], upper: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    lower.iter().zip(upper).map(|(&l, &u)| if l == u { l } else { rng.random_range(l..=u) }).collect()
}

enum Realized {
    Constant { value: Vec<f64>, onset: usize },
    Sinusoid { offset: f64, terms: Vec<SineTerm>, onset: usize },
}

impl Realized {
    fn at(&self, k: usize, out: &mut [f64]) {
        match self {
            Realized::Constant { value, onset } => {
                if k >= *onset {
                    out.copy_from_slice(value);
                } else {
                    out.fill(0.0);
                }
            }
            Realized::Sinusoid { offset, terms, onset } => {
                out[0] = if k >= *onset {
                    let kf = k as f64;
                    terms.iter().fold(*offset, |acc, t| acc + t.amplitude * (t.omega * kf + t.phase).sin())
                } else {
                    0.0
                };
            }
        }
    }
}

/// Surrogate for the physical plant: relative parameter error and sensor noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UncertaintySpec {
    /// Half-width of the uniform relative perturbation of `R_f`, `L_f`, `C_f`, `L_c`, `R_c`.
    pub relative: f64,
    /// Standard deviation of additive measurement noise on `i_odq` (A).
    pub noise_std: f64,
    /// Fixes the perturbed plant independently of the scenario seed.
    pub seed: Option<u64>,
}

impl Default for UncertaintySpec {
    fn default() -> Self {
        Self { relative: 0.05, noise_std: 0.01, seed: None }
    }
}

impl UncertaintySpec {
    pub fn none() -> Self {
        Self { relative: 0.0, noise_std: 0.0, seed: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.relative.is_finite() && self.relative >= 0.0) {
            return Err(Error::InvalidParameter { field: "relative", reason: format!("got {}", self.relative) });
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::InvalidParameter { field: "noise_std", reason: format!("got {}", self.noise_std) });
        }
        Ok(())
    }

    /// Draw one perturbed parameter set. Draws that make a parameter non-positive are
    /// rejected and redrawn, at most 100 times.
    pub fn perturb(&self, p: &MicrogridParams, rng: &mut impl Rng) -> Result<MicrogridParams> {
        self.validate()?;
        if self.relative == 0.0 {
            return Ok(p.clone());
        }
        let rel = self.relative;
        for _ in 0..100 {
            let mut q = p.clone();
            for v in [&mut q.r_f, &mut q.l_f, &mut q.c_f, &mut q.l_c, &mut q.r_c] {
                *v *= 1.0 + rng.random_range(-rel..=rel);
            }
            if q.validate().is_ok() && q.l_f > 0.0 && q.c_f > 0.0 && q.l_c > 0.0 {
                return Ok(q);
            }
        }
        Err(Error::InvalidParameter {
            field: "relative",
            reason: format!("perturbation of {rel} keeps producing non-positive parameters"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    /// Fixed point of the normal mode under `u(0)`, `d(0)`; plant and model each start at their own.
    #[default]
    SteadyState,
    /// The tabulated initial conditions of the reference parameter set.
    ReferencePoint,
    Custom { state: StateVector },
}

/// A scenario table that omits `fault_step` or `uncertainty` means no fault and a plant
/// identical to the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub total_steps: usize,
    #[serde(default)]
    pub fault_step: Option<usize>,
    pub disturbance: DisturbanceSpec,
    pub channels: DisturbanceChannels,
    #[serde(default)]
    pub uncertainty: Option<UncertaintySpec>,
    pub initial_state: InitialState,
    pub seed: u64,
}

impl Default for Scenario {
    /// Load step `[-15, 0.1]` for `k > 15000`, ground fault at `k = 40000`, 6 s horizon.
    fn default() -> Self {
        Self {
            total_steps: 60_000,
            fault_step: Some(40_000),
            disturbance: DisturbanceSpec::Step { value: vec![-15.0, 0.1], onset: 15_001 },
            channels: DisturbanceChannels::Load,
            uncertainty: Some(UncertaintySpec::default()),
            initial_state: InitialState::SteadyState,
            seed: 0,
        }
    }
}

impl Scenario {
    /// Fully decoupled single-channel setting with a small or large load fluctuation from
    /// `k = 1001` and a fault at `k = 3001`.
    pub fn perfect_setting(large: bool) -> Self {
        Self {
            total_steps: 4_000,
            fault_step: Some(3_001),
            disturbance: DisturbanceSpec::load_fluctuation(large, 1_001),
            channels: DisturbanceChannels::Perfect,
            uncertainty: None,
            initial_state: InitialState::SteadyState,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 {
            return Err(Error::Config("total_steps must be > 0".into()));
        }
        if let Some(kf) = self.fault_step {
            if kf >= self.total_steps {
                return Err(Error::Config(format!("fault_step {kf} must be < total_steps {}", self.total_steps)));
            }
        }
        self.disturbance.validate(self.channels)?;
        if let Some(u) = &self.uncertainty {
            u.validate()?;
        }
        Ok(())
    }

    pub fn fault_at(&self, k: usize) -> bool {
        self.fault_step.is_some_and(|kf| k >= kf)
    }
}

/// Detector annotations attached to a trace.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectorOutputs {
    pub r: Vec<f64>,
    pub j: Vec<f64>,
    pub alarm: Vec<bool>,
    pub j_th: f64,
}

/// Per-step record of a scenario. `y` is the nominal model output, `y_tilde` the plant's.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub ts: f64,
    pub fault_step: Option<usize>,
    pub n_d: usize,
    pub x: Vec<[f64; NX]>,
    pub u: Vec<[f64; NU]>,
    pub y: Vec<[f64; NY]>,
    pub y_tilde: Vec<[f64; NY]>,
    /// Row-major `len x n_d`.
    pub d: Vec<f64>,
    pub f: Vec<bool>,
    pub detection: Option<DetectorOutputs>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.ts
    }

    pub fn d_at(&self, k: usize) -> &[f64] {
        &self.d[k * self.n_d..(k + 1) * self.n_d]
    }

    /// `xi(k) = y_tilde(k) - y(k)`.
    pub fn output_discrepancy(&self) -> Mat {
        Mat::from_fn(self.len(), NY, |k, c| self.y_tilde[k][c] - self.y[k][c])
    }

    /// Largest absolute entry of `[y_tilde; u]`, the scale residual tolerances are quoted in.
    pub fn input_scale(&self) -> f64 {
        self.y_tilde
            .iter()
            .flat_map(|y| y.iter())
            .chain(self.u.iter().flat_map(|u| u.iter()))
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

fn matvec_add(m: &Mat, v: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, x) in v.iter().enumerate() {
            acc += m[(i, j)] * x;
        }
        *o += acc;
    }
}

fn to_state(v: &[f64]) -> [f64; NX] {
    let mut s = [0.0; NX];
    s.copy_from_slice(v);
    s
}

struct Runner<'a> {
    models: &'a ModelPair,
    x: [f64; NX],
}

impl Runner<'_> {
    fn output(&self) -> [f64; NY] {
        let mut y = [0.0; NY];
        matvec_add(&self.models.normal.c, &self.x, &mut y);
        y
    }

    fn step(&mut self, faulty: bool, u: &[f64], d: &[f64]) {
        let m = self.models.mode(faulty);
        let mut next = [0.0; NX];
        matvec_add(&m.a, &self.x, &mut next);
        matvec_add(&m.b_u, u, &mut next);
        if !faulty {
            matvec_add(&m.b_d, d, &mut next);
        }
        self.x = next;
    }
}

fn initial(models: &ModelPair, init: &InitialState, u0: &[f64], d0: &[f64]) -> Result<[f64; NX]> {
    Ok(match init {
        InitialState::SteadyState => to_state(&models.normal.steady_state(u0, d0)?),
        InitialState::ReferencePoint => StateVector::reference_point().to_array(),
        InitialState::Custom { state } => state.to_array(),
    })
}

/// Simulate the nominal model and, when an uncertainty spec is present, a perturbed plant in
/// lockstep under the same inputs. Without one, `y_tilde = y`.
pub fn simulate_scenario(params: &MicrogridParams, scenario: &Scenario) -> Result<Trace> {
    scenario.validate()?;
    let method = Default::default();
    let nominal = ModelPair::build(params, scenario.channels, method)?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let plant = match &scenario.uncertainty {
        Some(spec) if spec.relative > 0.0 => {
            let perturbed = match spec.seed {
                Some(s) => spec.perturb(params, &mut ChaCha8Rng::seed_from_u64(s))?,
                None => spec.perturb(params, &mut rng)?,
            };
            Some(ModelPair::build(&perturbed, scenario.channels, method)?)
        }
        _ => None,
    };
    let noise_std = scenario.uncertainty.as_ref().map_or(0.0, |u| u.noise_std);
    let noise = Normal::new(0.0, noise_std.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidParameter { field: "noise_std", reason: e.to_string() })?;

    let n_d = scenario.channels.count();
    let dist = scenario.disturbance.realize(n_d, &mut rng);
    let steps = scenario.total_steps;
    let mut d = vec![0.0; n_d];
    dist.at(0, &mut d);
    let u0 = params.input(scenario.fault_at(0));

    let mut model = Runner { models: &nominal, x: initial(&nominal, &scenario.initial_state, &u0, &d)? };
    let mut real = plant
        .as_ref()
        .map(|p| -> Result<Runner> { Ok(Runner { models: p, x: initial(p, &scenario.initial_state, &u0, &d)? }) })
        .transpose()?;

    let mut trace = Trace {
        ts: params.ts,
        fault_step: scenario.fault_step,
        n_d,
        x: Vec::with_capacity(steps),
        u: Vec::with_capacity(steps),
        y: Vec::with_capacity(steps),
        y_tilde: Vec::with_capacity(steps),
        d: Vec::with_capacity(steps * n_d),
        f: Vec::with_capacity(steps),
        detection: None,
    };
    for k in 0..steps {
        let faulty = scenario.fault_at(k);
        let u = params.input(faulty);
        dist.at(k, &mut d);
        if model.x.iter().any(|v| !v.is_finite() || v.abs() > 1e12) {
            return Err(Error::Diverged { step: k });
        }
        let y = model.output();
        let mut y_tilde = match &real {
            Some(r) => {
                if r.x.iter().any(|v| !v.is_finite() || v.abs() > 1e12) {
                    return Err(Error::Diverged { step: k });
                }
                r.output()
            }
            None => y,
        };
        if noise_std > 0.0 {
            for v in &mut y_tilde {
                *v += noise.sample(&mut rng);
            }
        }
        trace.x.push(model.x);
        trace.u.push(u);
        trace.y.push(y);
        trace.y_tilde.push(y_tilde);
        trace.d.extend_from_slice(&d);
        trace.f.push(faulty);

        model.step(faulty, &u, &d);
        if let Some(r) = real.as_mut() {
            r.step(faulty, &u, &d);
        }
    }
    Ok(trace)
}

/// Seed of the `i`-th child stream of a master seed.
pub fn child_seed(master: u64, i: u64) -> u64 {
    // splitmix64 finalizer, so neighbouring indices give unrelated streams
    let mut z = master.wrapping_add(i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `m` constant step sequences of length `T + 1`, each drawn uniformly from `[lower, upper]`.
pub fn generate_disturbance_instances(m: usize, t: usize, lower: &[f64], upper: &[f64], seed: u64) -> Result<Vec<Mat>> {
    check_bounds(lower, upper)?;
    if m == 0 {
        return Err(Error::InvalidParameter { field: "m", reason: "at least one instance is required".into() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..m)
        .map(|_| {
            let v = draw_uniform(lower, upper, &mut rng);
            Mat::from_fn(t + 1, v.len(), |_, c| v[c])
        })
        .collect())
}

/// Output discrepancy windows `xi_i(k) = y_tilde(k) - y(k)`, `k = 0..=T`.
///
/// Each instance draws a fresh perturbed plant, runs it beside the nominal model under the
/// same input and `excitation`, and records the difference. With the default steady-state
/// start the windows describe the steady regime the false-alarm certificate is about.
/// Windows whose discrepancy exceeds `sanity_cap * max|y|` are rejected as numerical failures.
#[allow(clippy::too_many_arguments)]
pub fn generate_uncertainty_instances(
    params: &MicrogridParams,
    uspec: &UncertaintySpec,
    m: usize,
    t: usize,
    excitation: &DisturbanceSpec,
    channels: DisturbanceChannels,
    seed: u64,
    sanity_cap: f64,
) -> Result<Vec<Mat>> {
    if m == 0 {
        return Err(Error::InvalidParameter { field: "m", reason: "at least one instance is required".into() });
    }
    let spec = UncertaintySpec { seed: None, ..uspec.clone() };
    (0..m)
        .into_par_iter()
        .map(|i| {
            let scenario = Scenario {
                total_steps: t + 1,
                fault_step: None,
                disturbance: excitation.clone(),
                channels,
                uncertainty: Some(spec.clone()),
                initial_state: InitialState::SteadyState,
                seed: child_seed(seed, i as u64),
            };
            let trace = simulate_scenario(params, &scenario)?;
            let xi = trace.output_discrepancy();
            let y_max = trace.y.iter().flat_map(|y| y.iter()).fold(0.0_f64, |a, v| a.max(v.abs()));
            let xi_max = xi.amax();
            if xi_max > sanity_cap * y_max.max(1.0) {
                return Err(Error::Numerical(format!(
                    "instance {i}: discrepancy {xi_max:.3e} exceeds {sanity_cap} x output scale {y_max:.3e}"
                )));
            }
            Ok(xi)
        })
        .collect()
}

/// Models and split for the single, fully decoupled disturbance channel.
pub fn perfect_setting_models(params: &MicrogridParams) -> Result<(ModelPair, DisturbanceSplit)> {
    let models = ModelPair::build(params, DisturbanceChannels::Perfect, Default::default())?;
    let split = split_disturbance(&models.normal.b_d, &[0])?;
    Ok((models, split))
}

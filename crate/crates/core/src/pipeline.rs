//! End-to-end entry points: synthesize a filter from a [`RunConfig`], replay a scenario
//! through it, and estimate false-alarm rates by Monte Carlo.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::dae::{build_dae, feasibility_check, stack_matrices, DaeSystem, FeasibilityReport, StackedDae};
use crate::detect::{exceedance_rate, run_detection, DetectionReport, Detector};
use crate::error::{Error, Result};
use crate::export::RateRow;
use crate::linalg::Mat;
use crate::model::{split_disturbance, DisturbanceChannels, DisturbanceSplit, ModelPair};
use crate::params::MicrogridParams;
use crate::simulate::{
    child_seed, generate_disturbance_instances, generate_uncertainty_instances, perfect_setting_models,
    simulate_scenario, DisturbanceSpec, InitialState, Scenario, Trace, UncertaintySpec,
};
use crate::synthesis::{
    average_signature, compute_threshold, detectability_check, solve_analytic, solve_qp, Denominator, Detectability,
    FilterCoefficients, SignatureMatrix, SynthesisMethod, Threshold,
};

/// Models, DAE and stacked matrices for one configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub models: ModelPair,
    pub split: DisturbanceSplit,
    pub dae: DaeSystem,
    pub stacked: StackedDae,
    pub denominator: Denominator,
    pub feasibility: FeasibilityReport,
}

fn models_for(params: &MicrogridParams, perfect: bool, decoupled: usize) -> Result<(ModelPair, DisturbanceSplit)> {
    if perfect {
        perfect_setting_models(params)
    } else {
        let models = ModelPair::build(params, DisturbanceChannels::Load, Default::default())?;
        let split = split_disturbance(&models.normal.b_d, &[decoupled])?;
        Ok((models, split))
    }
}

/// DAE of the reference parameter set, decoupling the first load channel (or the single
/// channel of the perfect setting).
pub fn reference_dae(perfect: bool) -> Result<(DaeSystem, ModelPair)> {
    let (models, split) = models_for(&MicrogridParams::default(), perfect, 0)?;
    let dae = build_dae(&models.normal, &models.faulty, &split)?;
    Ok((dae, models))
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let s = &cfg.synthesis;
    let (models, split) = models_for(&cfg.params, s.perfect, s.decoupled_channel)?;
    let dae = build_dae(&models.normal, &models.faulty, &split)?;
    let stacked = stack_matrices(&dae, s.d_n)?;
    let feasibility = feasibility_check(&stacked);
    let denominator = s.denominator.build(s.d_n)?;
    Ok(Prepared { models, split, dae, stacked, denominator, feasibility })
}

fn drop_column(m: &Mat, col: usize) -> Mat {
    let keep: Vec<_> = (0..m.ncols()).filter(|&j| j != col).map(|j| m.column(j).into_owned()).collect();
    if keep.is_empty() {
        Mat::zeros(m.nrows(), 0)
    } else {
        Mat::from_columns(&keep)
    }
}

/// Training data for the signature matrices. The perfect setting has none.
pub fn training_instances(cfg: &RunConfig, prepared: &Prepared) -> Result<(Vec<Mat>, Vec<Mat>)> {
    let s = &cfg.synthesis;
    if s.perfect {
        return Ok((Vec::new(), Vec::new()));
    }
    let excitation = DisturbanceSpec::RandomStep { lower: s.d_lower.clone(), upper: s.d_upper.clone(), onset: 0 };
    let xi = generate_uncertainty_instances(
        &cfg.params,
        &s.uncertainty,
        s.m,
        s.t,
        &excitation,
        cfg.channels(),
        child_seed(s.seed, 0),
        s.sanity_cap,
    )?;
    let d_check = if prepared.split.n_check() == 0 {
        Vec::new()
    } else {
        generate_disturbance_instances(s.m, s.t, &s.d_lower, &s.d_upper, child_seed(s.seed, 1))?
            .iter()
            .map(|d| drop_column(d, prepared.split.decoupled))
            .collect()
    };
    Ok((xi, d_check))
}

pub fn collect_signature(cfg: &RunConfig, prepared: &Prepared) -> Result<SignatureMatrix> {
    let (xi, d_check) = training_instances(cfg, prepared)?;
    average_signature(&xi, &d_check, &prepared.stacked, &prepared.denominator, cfg.synthesis.t)
}

/// Run the configured solver on prepared matrices.
pub fn solve(
    method: SynthesisMethod,
    prepared: &Prepared,
    sig: &SignatureMatrix,
    ridge: f64,
) -> Result<FilterCoefficients> {
    match method {
        SynthesisMethod::Qp => solve_qp(&prepared.stacked, sig, ridge, &prepared.denominator),
        SynthesisMethod::Analytic { delta } => solve_analytic(&prepared.stacked, sig, delta, ridge, &prepared.denominator),
    }
}

const ARTIFACT_FORMAT: &str = "groundfault-filter";
const ARTIFACT_VERSION: u32 = 1;

/// Serialized detector: numerator, denominator, threshold and evaluation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterArtifact {
    pub format: String,
    pub version: u32,
    pub d_n: usize,
    /// Width of each numerator block, `n_x + n_y`.
    pub block: usize,
    pub perfect: bool,
    pub method: SynthesisMethod,
    pub ridge: f64,
    pub eval_window: usize,
    pub threshold: Threshold,
    /// Ascending monic coefficients of `a(q)`.
    pub denominator: Vec<f64>,
    /// `N_bar = [N_0, ..., N_{d_N}]`.
    pub n_bar: Vec<f64>,
    /// `N_s L_0`, the coefficients applied to `[y_tilde; u]`.
    pub taps: Vec<Vec<f64>>,
}

impl FilterArtifact {
    pub fn new(
        filter: &FilterCoefficients,
        l0: &Mat,
        threshold: Threshold,
        eval_window: usize,
        perfect: bool,
    ) -> Self {
        Self {
            format: ARTIFACT_FORMAT.into(),
            version: ARTIFACT_VERSION,
            d_n: filter.d_n,
            block: filter.block,
            perfect,
            method: filter.method,
            ridge: filter.ridge,
            eval_window,
            threshold,
            denominator: filter.denominator.coeffs().to_vec(),
            n_bar: filter.n_bar.clone(),
            taps: filter.input_taps(l0),
        }
    }

    pub fn denominator(&self) -> Result<Denominator> {
        Denominator::new(self.denominator.clone())
    }

    pub fn detector(&self) -> Result<Detector> {
        self.detector_at(self.threshold.effective())
    }

    pub fn detector_at(&self, threshold: f64) -> Result<Detector> {
        Detector::new(self.taps.clone(), &self.denominator()?, threshold, self.eval_window)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != ARTIFACT_FORMAT {
            return Err(Error::Artifact(format!("not a filter artifact (format `{}`)", self.format)));
        }
        if self.version != ARTIFACT_VERSION {
            return Err(Error::Artifact(format!("unsupported artifact version {}", self.version)));
        }
        if self.n_bar.len() != (self.d_n + 1) * self.block || self.taps.len() != self.d_n + 1 {
            return Err(Error::Artifact("coefficient count does not match d_N".into()));
        }
        let a = self.denominator().map_err(|e| Error::Artifact(e.to_string()))?;
        if a.degree() <= self.d_n {
            return Err(Error::Artifact("denominator degree must exceed d_N".into()));
        }
        if self.n_bar.iter().chain(self.taps.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::Artifact("non-finite coefficient".into()));
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Artifact(e.to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let a: Self = toml::from_str(text).map_err(|e| Error::Artifact(e.to_string()))?;
        a.validate()?;
        Ok(a)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Artifact(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisReport {
    pub method: SynthesisMethod,
    pub objective: f64,
    pub sensitivity: f64,
    pub constraint_residual: f64,
    pub numerator_norm: f64,
    pub active_direction: usize,
    pub ridge: f64,
    pub threshold: Threshold,
    pub feasibility: FeasibilityReport,
    pub detectability: Detectability,
    pub instances: (usize, usize),
}

impl fmt::Display for SynthesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let method = match self.method {
            SynthesisMethod::Qp => "qp".to_string(),
            SynthesisMethod::Analytic { delta } => format!("analytic (delta = {delta:e})"),
        };
        writeln!(f, "method              {method}")?;
        writeln!(f, "objective           {:.6e}", self.objective)?;
        writeln!(f, "sensitivity         {:.6e}", self.sensitivity)?;
        writeln!(f, "constraint_residual {:.3e}", self.constraint_residual)?;
        writeln!(f, "numerator_norm      {:.6e}", self.numerator_norm)?;
        writeln!(f, "active_direction    {}", self.active_direction)?;
        writeln!(f, "ridge               {:e}", self.ridge)?;
        writeln!(f, "instances           xi={} d_check={}", self.instances.0, self.instances.1)?;
        writeln!(
            f,
            "threshold           J_th={:.6e} floor={:.6e} effective={:.6e} lambda={} T={}",
            self.threshold.j_th,
            self.threshold.floor,
            self.threshold.effective(),
            self.threshold.lambda,
            self.threshold.t
        )?;
        writeln!(f, "feasibility         {}", self.feasibility)?;
        match self.detectability {
            Detectability::Margin { steady_residual, margin, detectable, observable_dim } => write!(
                f,
                "detectability       detectable={detectable} margin={margin:.6e} r_ss={steady_residual:.6e} observable_dim={observable_dim}"
            ),
            Detectability::MarginallyStable { observable_dim } => {
                write!(f, "detectability       marginal (I - A_o singular) observable_dim={observable_dim}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisOutcome {
    pub artifact: FilterArtifact,
    pub report: SynthesisReport,
    pub filter: FilterCoefficients,
    pub signature: SignatureMatrix,
    pub prepared: Prepared,
}

/// Instances, signature matrices, solver and threshold in one call.
///
/// Returns [`Error::Infeasible`] when the decoupling constraint leaves no fault-sensitive
/// numerator.
pub fn synthesize(cfg: &RunConfig) -> Result<SynthesisOutcome> {
    let prepared = prepare(cfg)?;
    if !(prepared.feasibility.equality_feasible && prepared.feasibility.sensitivity_possible) {
        return Err(Error::Infeasible(prepared.feasibility.to_string()));
    }
    let signature = collect_signature(cfg, &prepared)?;
    synthesize_with(cfg, prepared, signature)
}

/// Finish synthesis from already collected signature matrices.
pub fn synthesize_with(cfg: &RunConfig, prepared: Prepared, signature: SignatureMatrix) -> Result<SynthesisOutcome> {
    let s = &cfg.synthesis;
    let filter = solve(s.method, &prepared, &signature, s.ridge)?;
    let threshold = compute_threshold(&filter, &signature, s.lambda, s.t)?;
    let detectability = detectability_check(
        &filter,
        &prepared.models.faulty,
        &prepared.stacked.l0,
        &cfg.params.fault_input(),
        threshold.effective(),
    )?;
    let report = SynthesisReport {
        method: filter.method,
        objective: filter.objective_value,
        sensitivity: filter.sensitivity,
        constraint_residual: filter.constraint_residual,
        numerator_norm: filter.n_vector().norm(),
        active_direction: filter.active_direction.index,
        ridge: filter.ridge,
        threshold,
        feasibility: prepared.feasibility,
        detectability,
        instances: signature.m,
    };
    let artifact = FilterArtifact::new(&filter, &prepared.stacked.l0, threshold, s.eval_window, s.perfect);
    Ok(SynthesisOutcome { artifact, report, filter, signature, prepared })
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub trace: Trace,
    pub report: DetectionReport,
}

/// Simulate the configured scenario and stream it through the artifact's detector.
pub fn run_scenario(cfg: &RunConfig, artifact: &FilterArtifact) -> Result<ScenarioRun> {
    cfg.validate()?;
    artifact.validate()?;
    if artifact.perfect != cfg.synthesis.perfect {
        return Err(Error::Artifact(format!(
            "artifact was synthesized with perfect = {} but the config has perfect = {}",
            artifact.perfect, cfg.synthesis.perfect
        )));
    }
    let mut trace = simulate_scenario(&cfg.params, &cfg.scenario)?;
    let mut det = artifact.detector()?;
    let report = run_detection(&mut trace, &mut det)?;
    Ok(ScenarioRun { trace, report })
}

#[derive(Debug, Clone)]
pub struct MonteCarloSummary {
    pub rows: Vec<RateRow>,
    /// Post-burn-in samples pooled over all trials.
    pub samples: usize,
    pub trials: usize,
}

/// Fault-free trials, each with a fresh perturbed plant, noise realization and load step,
/// started from steady state. Rates are pooled after the burn-in, per `lambda` in the sweep.
pub fn montecarlo(cfg: &RunConfig, artifact: &FilterArtifact) -> Result<MonteCarloSummary> {
    cfg.validate()?;
    artifact.validate()?;
    let mc = &cfg.montecarlo;
    let s = &cfg.synthesis;
    let disturbance = if s.perfect {
        cfg.scenario.disturbance.clone()
    } else {
        DisturbanceSpec::RandomStep { lower: s.d_lower.clone(), upper: s.d_upper.clone(), onset: 0 }
    };
    let uncertainty = if s.perfect { cfg.scenario.uncertainty.clone() } else { Some(s.uncertainty.clone()) };
    let probe = artifact.detector()?;
    let js: Vec<Vec<f64>> = (0..mc.trials)
        .into_par_iter()
        .map(|i| {
            let scenario = Scenario {
                total_steps: mc.steps,
                fault_step: None,
                disturbance: disturbance.clone(),
                channels: cfg.channels(),
                uncertainty: uncertainty.clone().map(|u| UncertaintySpec { seed: None, ..u }),
                initial_state: InitialState::SteadyState,
                seed: child_seed(mc.seed, i as u64),
            };
            let mut trace = simulate_scenario(&cfg.params, &scenario)?;
            let mut det = probe.clone();
            run_detection(&mut trace, &mut det)?;
            Ok(trace.detection.map(|d| d.j).unwrap_or_default())
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&[f64]> = js.iter().map(|v| v.as_slice()).collect();
    let samples = refs.iter().map(|j| j.len().saturating_sub(mc.burn_in)).sum();
    let rows = mc
        .lambdas
        .iter()
        .map(|&lambda| {
            let th = artifact.threshold.at_lambda(lambda)?;
            let rate = exceedance_rate(&refs, mc.burn_in, th.effective())?;
            let p = 1.0 / lambda;
            Ok(RateRow {
                lambda,
                j_th: th.effective(),
                rate,
                bound: p,
                slack: 3.0 * (p * (1.0 - p) / samples as f64).sqrt(),
                samples,
            })
        })
        .collect::<Result<_>>()?;
    Ok(MonteCarloSummary { rows, samples, trials: mc.trials })
}

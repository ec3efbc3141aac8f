//! TOML run configuration. Every section has defaults, so an empty file is the reference
//! load-change study.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DisturbanceChannels;
use crate::params::MicrogridParams;
use crate::simulate::{Scenario, UncertaintySpec};
use crate::synthesis::{Denominator, SynthesisMethod};

/// Choice of the filter denominator `a(q)`; its degree is always `d_N + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DenominatorSpec {
    /// `q^{d_N + 1}`.
    Deadbeat,
    /// `(q - pole)^{d_N + 1}`.
    RepeatedPole { pole: f64 },
    /// Explicit ascending monic coefficients.
    Coefficients { coeffs: Vec<f64> },
}

impl DenominatorSpec {
    pub fn build(&self, d_n: usize) -> Result<Denominator> {
        match self {
            DenominatorSpec::Deadbeat => Ok(Denominator::deadbeat(d_n + 1)),
            DenominatorSpec::RepeatedPole { pole } => Denominator::repeated_pole(*pole, d_n + 1),
            DenominatorSpec::Coefficients { coeffs } => Denominator::new(coeffs.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    /// Numerator degree `d_N`.
    pub d_n: usize,
    pub denominator: DenominatorSpec,
    /// Ridge `eps` added to the signature matrices.
    pub ridge: f64,
    pub method: SynthesisMethod,
    /// Markov factor of the threshold; the false-alarm bound is `1 / lambda`.
    pub lambda: f64,
    /// Number of training instances per kind.
    pub m: usize,
    /// Length of each training instance minus one.
    pub t: usize,
    /// Bounds of the random step disturbance.
    pub d_lower: Vec<f64>,
    pub d_upper: Vec<f64>,
    /// Zero-based column of `B_d` to decouple.
    pub decoupled_channel: usize,
    /// Single fully decoupled disturbance channel, no training data.
    pub perfect: bool,
    pub uncertainty: UncertaintySpec,
    /// Reject discrepancy windows larger than this multiple of the output scale.
    pub sanity_cap: f64,
    /// Consecutive exceedances required to raise an alarm.
    pub eval_window: usize,
    pub seed: u64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            d_n: 10,
            denominator: DenominatorSpec::Deadbeat,
            ridge: 1e-6,
            method: SynthesisMethod::Qp,
            lambda: 5.0,
            m: 100,
            t: 200,
            d_lower: vec![-20.0, 0.05],
            d_upper: vec![-10.0, 0.15],
            decoupled_channel: 0,
            perfect: false,
            uncertainty: UncertaintySpec::default(),
            sanity_cap: 0.5,
            eval_window: 1,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub steps: usize,
    /// Leading samples of each trace excluded from the rate.
    pub burn_in: usize,
    pub lambdas: Vec<f64>,
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { trials: 100, steps: 600, burn_in: 100, lambdas: vec![2.0, 5.0, 10.0], seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    pub out_dir: PathBuf,
    /// Divide exported currents by this base (A) for per-unit plots.
    pub current_base: Option<f64>,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self { out_dir: PathBuf::from("out"), current_base: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: MicrogridParams,
    pub scenario: Scenario,
    pub synthesis: SynthesisConfig,
    pub montecarlo: MonteCarloConfig,
    pub io: IoConfig,
}

impl RunConfig {
    /// Fully decoupled setting with a small (`large = false`) or large load fluctuation.
    pub fn perfect_setting(large: bool) -> Self {
        let mut cfg = Self::default();
        cfg.set_perfect(large);
        cfg
    }

    /// Switch an existing config to the fully decoupled setting.
    pub fn set_perfect(&mut self, large: bool) {
        self.synthesis.perfect = true;
        self.synthesis.decoupled_channel = 0;
        self.scenario = Scenario { seed: self.scenario.seed, ..Scenario::perfect_setting(large) };
    }

    pub fn channels(&self) -> DisturbanceChannels {
        if self.synthesis.perfect {
            DisturbanceChannels::Perfect
        } else {
            DisturbanceChannels::Load
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| match e {
            Error::Config(s) => Error::Config(s),
            other => Error::Config(other.to_string()),
        };
        self.params.validate().map_err(cfg_err)?;
        self.scenario.validate().map_err(cfg_err)?;
        let s = &self.synthesis;
        if s.perfect != (self.scenario.channels == DisturbanceChannels::Perfect) {
            return Err(Error::Config("synthesis.perfect and scenario.channels disagree".into()));
        }
        if !(s.lambda.is_finite() && s.lambda >= 1.0) {
            return Err(Error::Config(format!("synthesis.lambda must be >= 1, got {}", s.lambda)));
        }
        if !(s.ridge.is_finite() && s.ridge >= 0.0) {
            return Err(Error::Config(format!("synthesis.ridge must be >= 0, got {}", s.ridge)));
        }
        if let SynthesisMethod::Analytic { delta } = s.method {
            if !(delta.is_finite() && delta > 0.0) {
                return Err(Error::Config(format!("analytic delta must be > 0, got {delta}")));
            }
        }
        if s.t <= s.d_n + 1 {
            return Err(Error::Config(format!("synthesis.t = {} must exceed d_N + 1 = {}", s.t, s.d_n + 1)));
        }
        if !s.perfect {
            if s.m == 0 {
                return Err(Error::Config("synthesis.m must be >= 1".into()));
            }
            let n_d = self.channels().count();
            if s.d_lower.len() != n_d || s.d_upper.len() != n_d {
                return Err(Error::Config(format!("disturbance bounds need {n_d} entries")));
            }
            if s.d_lower.iter().zip(&s.d_upper).any(|(l, u)| l.partial_cmp(u).is_none_or(|o| o.is_gt())) {
                return Err(Error::Config("disturbance bounds describe an empty interval".into()));
            }
            if s.decoupled_channel >= n_d {
                return Err(Error::Config(format!("decoupled_channel must be < {n_d}")));
            }
        }
        s.denominator.build(s.d_n).map_err(cfg_err)?;
        if s.eval_window == 0 {
            return Err(Error::Config("synthesis.eval_window must be >= 1".into()));
        }
        let mc = &self.montecarlo;
        if mc.trials == 0 || mc.burn_in >= mc.steps {
            return Err(Error::Config("montecarlo needs trials >= 1 and burn_in < steps".into()));
        }
        if mc.lambdas.iter().any(|l| !(l.is_finite() && *l >= 1.0)) {
            return Err(Error::Config("montecarlo.lambdas must all be >= 1".into()));
        }
        if let Some(b) = self.io.current_base {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::Config(format!("io.current_base must be > 0, got {b}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{DisturbanceSpec, InitialState};

    #[test]
    fn defaults_describe_reference_study() {
        let c = RunConfig::default();
        assert_eq!(c.synthesis.d_n, 10);
        assert_eq!(c.params.ts, 1e-4);
        assert_eq!((c.synthesis.m, c.synthesis.t), (100, 200));
        assert_eq!(c.scenario.fault_step, Some(40_000));
        assert_eq!(c.scenario.disturbance, DisturbanceSpec::Step { value: vec![-15.0, 0.1], onset: 15_001 });
        c.validate().unwrap();
    }

    #[test]
    fn empty_file_is_default() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trip_preserves_every_field() {
        let mut c = RunConfig::perfect_setting(true);
        c.synthesis.method = SynthesisMethod::Analytic { delta: 1e4 };
        c.synthesis.denominator = DenominatorSpec::RepeatedPole { pole: 0.3 };
        c.scenario.initial_state = InitialState::ReferencePoint;
        c.io.current_base = Some(50.0);
        let text = c.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
        let d = RunConfig::default();
        assert_eq!(RunConfig::from_toml_str(&d.to_toml_string().unwrap()).unwrap(), d);
    }

    #[test]
    fn partial_file_overrides() {
        let c = RunConfig::from_toml_str(
            "[params]\nR_L = 10.0\n[synthesis]\nlambda = 2.0\nmethod = { kind = \"analytic\", delta = 100.0 }\n",
        )
        .unwrap();
        assert_eq!(c.params.r_load, 10.0);
        assert_eq!(c.params.l_f, MicrogridParams::default().l_f);
        assert_eq!(c.synthesis.lambda, 2.0);
        assert_eq!(c.synthesis.method, SynthesisMethod::Analytic { delta: 100.0 });
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for text in [
            "[synthesis]\nlambda = 0.5\n",
            "[synthesis]\nt = 5\n",
            "[params]\nL_f = -1.0\n",
            "[scenario]\ntotal_steps = 10\nfault_step = 20\ndisturbance = { kind = \"none\" }\n",
            "[synthesis]\nperfect = true\n",
            "[nonsense]\n",
        ] {
            assert!(matches!(RunConfig::from_toml_str(text), Err(Error::Config(_))), "{text}");
        }
    }
}

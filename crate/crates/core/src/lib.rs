//! Ground-fault detection filters for inverter-based microgrids.
//!
//! The crate builds the dq-frame state-space model of a single-inverter microgrid with an
//! LCL filter and cascaded PI control, casts it into a polynomial (DAE) residual-generator
//! form, and synthesizes a scalar detection filter `N(q) L_0 / a(q)` by an equality
//! constrained quadratic program trained on model-mismatch and disturbance data. A threshold
//! with a Markov-inequality false-alarm certificate and a streaming detector complete the
//! pipeline.
//!
//! ```no_run
//! use groundfault::prelude::*;
//!
//! let config = RunConfig::default();
//! let outcome = synthesize(&config).unwrap();
//! let run = run_scenario(&config, &outcome.artifact).unwrap();
//! println!("alarm raised at {:?}", run.report.first_alarm_after_fault);
//! ```

pub mod config;
pub mod dae;
pub mod detect;
pub mod error;
pub mod export;
pub mod linalg;
pub mod model;
pub mod params;
pub mod pipeline;
pub mod simulate;
pub mod synthesis;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::config::{RunConfig, SynthesisConfig};
    pub use crate::dae::{build_dae, feasibility_check, stack_matrices, DaeSystem, FeasibilityReport, StackedDae};
    pub use crate::detect::{false_alarm_rate, run_detection, AlarmEvent, AlarmKind, DetectionReport, Detector};
    pub use crate::error::{Error, Result};
    pub use crate::model::{
        build_faulty_model, build_normal_model, discretize, split_disturbance, unified_model, ContinuousModel,
        DiscreteModel, Discretization, DisturbanceChannels, DisturbanceSplit, ModelPair,
    };
    pub use crate::params::{MicrogridParams, StateVector};
    pub use crate::pipeline::{
        montecarlo, prepare, run_scenario, synthesize, FilterArtifact, MonteCarloSummary, ScenarioRun, SynthesisOutcome,
    };
    pub use crate::simulate::{simulate_scenario, DisturbanceSpec, InitialState, Scenario, Trace, UncertaintySpec};
    pub use crate::synthesis::{
        compute_threshold, detectability_check, solve_analytic, solve_qp, Denominator, Detectability, FilterCoefficients,
        SignatureMatrix, SynthesisMethod, Threshold,
    };
}

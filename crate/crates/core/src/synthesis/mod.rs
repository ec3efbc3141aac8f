//! Filter synthesis: signature matrices from training data, the constrained QP and its
//! closed-form approximation, the false-alarm threshold and the detectability test.

mod analytic;
mod denominator;
mod detectability;
mod filter;
mod qp;
mod signature;
mod threshold;

pub use analytic::{solve_analytic, DEFAULT_DELTA};
pub use denominator::{impulse_response, Denominator};
pub use detectability::{detectability_check, steady_gain, Detectability};
pub use filter::{constraint_residual, theorem_objective, Direction, FilterCoefficients, SynthesisMethod};
pub use qp::{solve_qp, DEFAULT_RIDGE};
pub use signature::{
    average_signature, block_hankel, build_gamma, pad_output_discrepancy, signature_instance, SignatureMatrix,
};
pub use threshold::{compute_threshold, Threshold};

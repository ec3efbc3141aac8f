//! Compare the closed-form penalty solution with the exact QP as the penalty grows.
//!
//! Run with `cargo run --release --example analytic_vs_qp`.

use groundfault::pipeline::{collect_signature, prepare};
use groundfault::prelude::*;

fn main() -> Result<()> {
    let config = RunConfig::default();
    let prepared = prepare(&config)?;
    let sig = collect_signature(&config, &prepared)?;
    let ridge = config.synthesis.ridge;
    let qp = solve_qp(&prepared.stacked, &sig, ridge, &prepared.denominator)?;
    println!("QP        objective {:.8e}  ||N G0|| {:.2e}", qp.objective_value, qp.constraint_residual);
    for delta in [1e2, 1e4, 1e6] {
        let an = solve_analytic(&prepared.stacked, &sig, delta, ridge, &prepared.denominator)?;
        let gap = (an.objective_value - qp.objective_value).abs() / qp.objective_value.abs();
        let rel = an.constraint_residual / an.n_vector().norm();
        println!(
            "delta={delta:>7.0e} objective {:.8e}  gap {gap:.2e}  ||N G0||/||N|| {rel:.2e}",
            an.objective_value
        );
    }
    Ok(())
}

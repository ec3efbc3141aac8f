//! Build the normal and ground-fault models, discretize them two ways and report the
//! properties the detection filter relies on.
//!
//! Run with `cargo run --release --example model_inspection`.

use groundfault::linalg::{observable_basis, spectral_radius};
use groundfault::prelude::*;

fn main() -> Result<()> {
    let p = MicrogridParams::default();
    let normal = build_normal_model(&p)?;
    let faulty = build_faulty_model(&p)?;

    let eig = normal.a.complex_eigenvalues();
    let slowest = eig.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    println!("normal mode: largest real part of eig(A_h) = {slowest:.3} rad/s");

    let zoh = discretize(&normal, p.ts, Discretization::ZeroOrderHold)?;
    let euler = discretize(&normal, p.ts, Discretization::ForwardEuler)?;
    println!("spectral radius, ZOH {:.6}  Euler {:.6}", spectral_radius(&zoh.a), spectral_radius(&euler.a));

    let u = p.input(false);
    let x_zoh = zoh.steady_state(&u, &[0.0, 0.0])?;
    let x_euler = euler.steady_state(&u, &[0.0, 0.0])?;
    println!("steady i_od: ZOH {:.6} A, Euler {:.6} A", x_zoh[8], x_euler[8]);

    let fz = discretize(&faulty, p.ts, Discretization::ZeroOrderHold)?;
    println!("observable states in fault mode: {} of 10", observable_basis(&fz.a, &fz.c).nrows());

    let (dae, _) = groundfault::pipeline::reference_dae(false)?;
    let stacked = stack_matrices(&dae, 10)?;
    println!("{}", feasibility_check(&stacked));
    Ok(())
}

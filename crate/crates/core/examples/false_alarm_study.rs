//! Fault-free Monte Carlo study of the threshold: empirical exceedance rates against the
//! Markov bound `1 / lambda` for several lambdas.
//!
//! Run with `cargo run --release --example false_alarm_study`.

use groundfault::prelude::*;

fn main() -> Result<()> {
    let config = RunConfig::default();
    let outcome = synthesize(&config)?;
    let summary = montecarlo(&config, &outcome.artifact)?;
    println!("{} trials, {} pooled samples after burn-in", summary.trials, summary.samples);
    println!("{:>6} {:>12} {:>9} {:>7} {:>8}", "lambda", "J_th", "rate", "1/lam", "slack");
    for r in &summary.rows {
        let ok = if r.rate <= r.bound + r.slack { "within bound" } else { "ABOVE bound" };
        println!("{:>6} {:>12.4e} {:>9.5} {:>7.3} {:>8.5}  {ok}", r.lambda, r.j_th, r.rate, r.bound, r.slack);
    }
    Ok(())
}

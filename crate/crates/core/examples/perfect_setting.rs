//! Fully decoupled disturbance channel: no training data, the filter only has to reject the
//! load fluctuation and react to the ground fault at k = 3001.
//!
//! Run with `cargo run --release --example perfect_setting [-- --large]`.

use groundfault::prelude::*;

fn main() -> Result<()> {
    let large = std::env::args().any(|a| a == "--large");
    let config = RunConfig::perfect_setting(large);
    let outcome = synthesize(&config)?;
    println!("{}", outcome.report);

    let run = run_scenario(&config, &outcome.artifact)?;
    let detection = run.trace.detection.as_ref().expect("detector output");
    let pre_fault = detection.r[1001..3001].iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    println!("max |r| before the fault  {pre_fault:.3e}");
    println!("threshold                 {:.3e}", detection.j_th);
    println!("alarms before the fault   {}", run.report.alarms_before_fault);
    println!("first alarm               {:?}", run.report.first_alarm_after_fault);
    for e in run.report.events.iter().take(5) {
        println!("  k={} {} J={:.3e}", e.k, e.kind.as_str(), e.j);
    }
    Ok(())
}

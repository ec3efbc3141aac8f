//! Reference study: 5% parameter mismatch and sensor noise, load step `d = [-15, 0.1]` for
//! k > 15000 and a ground fault at k = 40000. Writes `trace.csv` and `events.csv` to `out/`.
//!
//! Run with `cargo run --release --example load_change_detection`.

use std::path::Path;

use groundfault::export::{write_events_csv, write_trace_csv};
use groundfault::prelude::*;

fn main() -> Result<()> {
    let config = RunConfig::default();
    let outcome = synthesize(&config)?;
    println!("{}", outcome.report);

    let run = run_scenario(&config, &outcome.artifact)?;
    let detection = run.trace.detection.as_ref().expect("detector output");
    let peak = |lo: usize, hi: usize| detection.j[lo..hi].iter().fold(0.0_f64, |m, v| m.max(*v));
    println!("J_th                          {:.4e}", detection.j_th);
    println!("peak J in [14000, 15000)      {:.4e}", peak(14_000, 15_000));
    println!("peak J in [15000, 16000)      {:.4e}", peak(15_000, 16_000));
    println!("peak J in [16000, 40000)      {:.4e}", peak(16_000, 40_000));
    println!("alarms before the fault       {}", run.report.alarms_before_fault);
    println!("detection delay (samples)     {:?}", run.report.detection_delay);
    println!("alarm persists after fault    {}", run.report.persistent_after_fault);

    let out = Path::new("out");
    std::fs::create_dir_all(out)?;
    write_trace_csv(&out.join("trace.csv"), &run.trace, None)?;
    write_events_csv(&out.join("events.csv"), &run.report.events)?;
    outcome.artifact.save(&out.join("filter.toml"))?;
    println!("wrote out/trace.csv, out/events.csv, out/filter.toml");
    Ok(())
}

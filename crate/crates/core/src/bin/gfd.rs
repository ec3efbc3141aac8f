//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 infeasible synthesis, 4 runtime or
//! numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use groundfault::export::{write_events_csv, write_montecarlo_csv, write_trace_csv};
use groundfault::pipeline::{montecarlo, prepare, run_scenario, synthesize, FilterArtifact};
use groundfault::prelude::*;

#[derive(Parser)]
#[command(name = "gfd", version, about = "Ground-fault detection filter synthesis and replay")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; defaults reproduce the load-change study.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Filter artifact to write (synthesize) or read (run, montecarlo, inspect).
    #[arg(long, global = true)]
    filter: Option<PathBuf>,
    /// Output directory, overriding `io.out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed for training data, scenario noise and Monte Carlo trials.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use the single fully decoupled disturbance channel and its load-fluctuation scenario.
    #[arg(long, global = true)]
    perfect: bool,
    /// Closed-form solution instead of the QP, with penalty DELTA (default 1e6).
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "1e6", value_name = "DELTA")]
    analytic: Option<f64>,
    /// Markov factor of the threshold (synthesize) or the single lambda to evaluate (montecarlo).
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Number of Monte Carlo trials.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Run the scenario without the ground fault.
    #[arg(long, global = true)]
    no_fault: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate training data, solve for the filter and write the artifact plus a report.
    Synthesize,
    /// Simulate the scenario, run the detector and write trace.csv and events.csv.
    Run,
    /// Estimate fault-free false-alarm rates against the Markov bound; writes montecarlo.csv.
    Montecarlo,
    /// Print feasibility ranks and dump the stacked matrices as CSV.
    Inspect,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::Artifact(_) => 2,
        Error::Infeasible(_) => 3,
        _ => 4,
    }
}

impl Cli {
    fn load_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if self.perfect && !cfg.synthesis.perfect {
            cfg.set_perfect(false);
        }
        if let Some(delta) = self.analytic {
            cfg.synthesis.method = SynthesisMethod::Analytic { delta };
        }
        if let Some(seed) = self.seed {
            cfg.synthesis.seed = seed;
            cfg.scenario.seed = seed;
            cfg.montecarlo.seed = seed;
        }
        if let Some(lambda) = self.lambda {
            cfg.synthesis.lambda = lambda;
            cfg.montecarlo.lambdas = vec![lambda];
        }
        if let Some(trials) = self.trials {
            cfg.montecarlo.trials = trials;
        }
        if self.no_fault {
            cfg.scenario.fault_step = None;
        }
        if let Some(out) = &self.out {
            cfg.io.out_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn filter_path(&self, cfg: &RunConfig) -> PathBuf {
        self.filter.clone().unwrap_or_else(|| cfg.io.out_dir.join("filter.toml"))
    }
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    std::fs::create_dir_all(&cfg.io.out_dir)?;
    Ok(&cfg.io.out_dir)
}

fn cmd_synthesize(cli: &Cli) -> Result<()> {
    let cfg = cli.load_config()?;
    let outcome = match synthesize(&cfg) {
        Ok(o) => o,
        Err(e @ Error::Infeasible(_)) => {
            eprintln!("synthesis is infeasible");
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    let out = out_dir(&cfg)?;
    let filter = cli.filter_path(&cfg);
    outcome.artifact.save(&filter)?;
    let report = outcome.report.to_string();
    std::fs::write(out.join("synthesis_report.txt"), format!("{report}\n"))?;
    println!("{report}");
    println!("filter written to {}", filter.display());
    Ok(())
}

fn cmd_run(cli: &Cli) -> Result<()> {
    let cfg = cli.load_config()?;
    let artifact = FilterArtifact::load(&cli.filter_path(&cfg))?;
    let run = run_scenario(&cfg, &artifact)?;
    let out = out_dir(&cfg)?;
    write_trace_csv(&out.join("trace.csv"), &run.trace, cfg.io.current_base)?;
    write_events_csv(&out.join("events.csv"), &run.report.events)?;
    println!("steps                 {}", run.trace.len());
    println!("threshold             {:.6e}", artifact.threshold.effective());
    println!("alarms before fault   {}", run.report.alarms_before_fault);
    match (run.report.first_alarm_after_fault, run.report.detection_delay) {
        (Some(k), Some(delay)) => println!("first alarm           k={k} (delay {delay} samples)"),
        _ => println!("first alarm           none"),
    }
    println!("events                {}", run.report.events.len());
    println!("wrote {} and {}", out.join("trace.csv").display(), out.join("events.csv").display());
    Ok(())
}

fn cmd_montecarlo(cli: &Cli) -> Result<()> {
    let cfg = cli.load_config()?;
    let artifact = FilterArtifact::load(&cli.filter_path(&cfg))?;
    let summary = montecarlo(&cfg, &artifact)?;
    let out = out_dir(&cfg)?;
    write_montecarlo_csv(&out.join("montecarlo.csv"), &summary.rows)?;
    println!("{:>8} {:>12} {:>10} {:>8} {:>10}", "lambda", "J_th", "rate", "bound", "slack");
    for r in &summary.rows {
        println!("{:>8} {:>12.4e} {:>10.5} {:>8.4} {:>10.5}", r.lambda, r.j_th, r.rate, r.bound, r.slack);
    }
    println!("{} trials, {} pooled samples", summary.trials, summary.samples);
    Ok(())
}

fn cmd_inspect(cli: &Cli) -> Result<()> {
    let cfg = cli.load_config()?;
    let prepared = prepare(&cfg)?;
    let st = &prepared.stacked;
    println!("d_N                 {}", st.d_n);
    println!("Hbar(0)             {}x{}", st.hbar(false).nrows(), st.hbar(false).ncols());
    println!("G0 = Hbar(0) Ibar   {}x{}", st.g0.nrows(), st.g0.ncols());
    println!("G1 = Lbar Hbar(1) Ibar {}x{}", st.g1.nrows(), st.g1.ncols());
    println!("feasibility         {}", prepared.feasibility);
    let dir = out_dir(&cfg)?.join("matrices");
    st.dump_csv(&dir)?;
    println!("stacked matrices written to {}", dir.display());
    if let Some(path) = &cli.filter {
        let a = FilterArtifact::load(path)?;
        println!("filter              d_N={} method={:?} eval_window={}", a.d_n, a.method, a.eval_window);
        println!("threshold           {:?}", a.threshold);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synthesize => cmd_synthesize(&cli),
        Command::Run => cmd_run(&cli),
        Command::Montecarlo => cmd_montecarlo(&cli),
        Command::Inspect => cmd_inspect(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_documented_exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Artifact("x".into())), 2);
        assert_eq!(exit_code(&Error::Infeasible("x".into())), 3);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 4);
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ftl_core::harness::{check_assumptions, run_experiment, write_convergence, ExperimentConfig};

/// Follow-the-leader particle solver for scalar conservation laws.
#[derive(Parser)]
#[command(name = "ftl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every N of the configuration and certify the discrete estimates.
    Run(Common),
    /// Tabulate errors against the reference solution over N.
    Converge(Common),
    /// Report the sampled assumptions on the velocity law.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for interface stability; the solver is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn output_dir(args: &Common, config: &ExperimentConfig) -> PathBuf {
    args.out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("ftl-out"))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> ftl_core::Result<bool> {
    match cli.command {
        Command::Run(args) => {
            let config = ExperimentConfig::load(&args.config)?;
            let out = output_dir(&args, &config);
            let summary = run_experiment(&config, &out, args.jobs)?;
            for r in &summary.runs {
                println!(
                    "N = {:>6}  {}  violations = {}  steps = {}",
                    r.n,
                    if r.passed { "pass" } else { "FAIL" },
                    r.violations,
                    r.integrator.accepted_steps
                );
                for w in &r.warnings {
                    println!("    warning: {w}");
                }
            }
            println!("outputs in {}", out.display());
            Ok(summary.passed())
        }
        Command::Converge(args) => {
            let config = ExperimentConfig::load(&args.config)?;
            let out = output_dir(&args, &config);
            let table = write_convergence(&config, &out, args.jobs)?;
            println!("scenario {} against the {} solution at T = {}", table.scenario, table.oracle, table.t_end);
            println!("{:>6} {:>14} {:>14} {:>14} {:>14} {:>8}", "N", "d(ρ̃₀,ρ̄)", "ℓ·span", "W(T)", "L1(T)", "order");
            for r in &table.rows {
                println!(
                    "{:>6} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>8}",
                    r.n,
                    r.initial_distance,
                    r.initial_bound,
                    r.wasserstein_error,
                    r.l1_error,
                    r.l1_order.map(|o| format!("{o:.3}")).unwrap_or_default()
                );
            }
            Ok(table.initial_bounds_hold())
        }
        Command::Check { config } => {
            let config = ExperimentConfig::load(&config)?;
            let report = check_assumptions(&config)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.passed())
        }
    }
}

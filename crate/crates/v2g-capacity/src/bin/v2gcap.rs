use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use v2g_capacity::experiment::{run_experiment, ExperimentOptions, SweepSpec};
use v2g_capacity::scenario::load_scenario;

/// Estimate regulation capacities of an EV aggregator by simulation and
/// closed-form analysis.
#[derive(Parser)]
#[command(name = "v2gcap", version)]
struct Args {
    /// Scenario file
    #[arg(long)]
    scenario: PathBuf,

    /// Master seed for all random streams
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Override the scenario's simulation horizon (minutes)
    #[arg(long)]
    horizon: Option<f64>,

    /// Override the scenario's warm-up truncation (minutes)
    #[arg(long)]
    warmup: Option<f64>,

    /// Override the scenario's replication count
    #[arg(long)]
    replications: Option<u32>,

    /// Service-rate sweep, e.g. --sweep mu1=0.02,0.0143,0.01
    #[arg(long, value_parser = SweepSpec::parse)]
    sweep: Option<SweepSpec>,

    /// Output directory for CSV results
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Trace sampling interval (minutes)
    #[arg(long, default_value_t = 1.0)]
    sample_interval: f64,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: Args) -> v2g_capacity::Result<()> {
    let mut config = load_scenario(&args.scenario)?;
    if let Some(h) = args.horizon {
        config.horizon = h;
    }
    if let Some(w) = args.warmup {
        config.warmup = w;
    }
    if let Some(r) = args.replications {
        config.replications = r;
    }
    config.validate()?;

    let opts = ExperimentOptions {
        seed: args.seed,
        sample_interval: args.sample_interval,
        out_dir: Some(args.out.clone()),
        write_traces: true,
    };
    let outcome = run_experiment(&config, args.sweep.as_ref(), &opts)?;

    let print_row = |row: &v2g_capacity::experiment::SummaryRow| {
        println!(
            "{} {}: analytic C_RD = {:.2} kW, C_RU = {:.2} kW | \
             simulated C_RD = {:.2} kW (err {:+.4}), C_RU = {:.2} kW (err {:+.4})",
            row.param_name,
            row.param_value,
            row.c_rd_ana,
            row.c_ru_ana,
            row.c_rd_sim,
            row.err_rd,
            row.c_ru_sim,
            row.err_ru
        );
        if row.failed_replications > 0 {
            eprintln!(
                "warning: {} replication(s) failed for {} {}",
                row.failed_replications, row.param_name, row.param_value
            );
        }
    };
    print_row(&outcome.base);
    for row in &outcome.sweep_rows {
        print_row(row);
    }
    println!("results written to {}", args.out.display());
    Ok(())
}

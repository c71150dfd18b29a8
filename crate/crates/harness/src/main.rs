use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flier_harness::config::parse_filter;
use flier_harness::output::emit_outputs;
use flier_harness::{run_sweep, DeploymentSpec, EventFamily, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "flier", version, about = "Contingency identification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every event of a family, rank candidates and write reports.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// MATPOWER `.m` or JSON case file.
    #[arg(long)]
    case: PathBuf,
    /// single, sparse, all, a comma-separated bus list, or random:<k>.
    #[arg(long, default_value = "sparse")]
    pmus: String,
    /// lines, splits or merges.
    #[arg(long, default_value = "lines")]
    events: String,
    /// Standard deviation of the measurement noise (rad and p.u.).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// on, off or lenient:<k>.
    #[arg(long, default_value = "on")]
    filter: String,
    #[arg(long)]
    out: PathBuf,
    /// Draw events at random until this many have converged.
    #[arg(long)]
    sample: Option<usize>,
    /// Timing repetitions per event; the median is reported.
    #[arg(long, default_value_t = 3)]
    timing_repeats: usize,
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, HarnessError> {
        let deployment: DeploymentSpec = self.pmus.parse()?;
        let events: EventFamily = self.events.parse()?;
        let mut config = ExperimentConfig::new(&self.case, deployment, events);
        config.noise = self.noise;
        config.seed = self.seed;
        config.filter = parse_filter(&self.filter)?;
        config.sample = self.sample;
        config.timing_repeats = self.timing_repeats;
        config.threads = self.threads;
        config.validate()?;
        Ok(config)
    }
}

fn run(args: &RunArgs) -> Result<(), HarnessError> {
    let config = args.config()?;
    let result = run_sweep(&config)?;
    emit_outputs(&result, &args.out)?;
    let s = result.summary();
    println!(
        "{} {:?}: {} events ({} excluded), top-1 {}, top-3 {}, median skipped {:.3}",
        s.case,
        s.events_family,
        s.events,
        s.excluded.len(),
        s.top1,
        s.top3,
        s.median_skipped_fraction
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}

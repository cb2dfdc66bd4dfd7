use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use petc::bounds::validate_monitoring_period;
use petc::config;
use petc::report;
use petc::sim::{self, Scenario, SweepParam};
use petc::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "petc", about = "Event-triggered prescribed-time controller simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one closed-loop run and write the artifacts.
    Run(RunArgs),
    /// Print the derived bound table for a scenario.
    Bounds { scenario: Option<PathBuf> },
    /// Run one scenario per value of a swept parameter.
    Sweep(SweepArgs),
    /// Load and validate a scenario without running it.
    Validate { scenario: Option<PathBuf> },
}

#[derive(Args)]
struct RunArgs {
    scenario: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    scenario: Option<PathBuf>,
    /// One of: h, alpha, beta0, T, omega.
    #[arg(long)]
    param: SweepParam,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

fn load(path: &Option<PathBuf>) -> petc::Result<Scenario> {
    match path {
        Some(p) => config::load_scenario(p),
        None => Ok(config::default_scenario()),
    }
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    match err {
        Error::Numerical { .. } => ExitCode::from(EXIT_NUMERICAL),
        _ => ExitCode::from(EXIT_VALIDATION),
    }
}

fn cmd_run(args: &RunArgs, quiet: bool) -> petc::Result<()> {
    let scenario = load(&args.scenario)?;
    let set = scenario.bound_set()?;
    let output = sim::run(&scenario)?;
    let metrics = petc::metrics::compute(
        &output,
        scenario.trigger.prescribed_time,
        scenario.sim.dt,
        set.eps_bound,
    )?;
    let h_class = validate_monitoring_period(scenario.trigger.h, &set);
    report::write_run_artifacts(&args.output_dir, &scenario, &output, &metrics, &set, h_class)?;
    if !quiet {
        print!(
            "{}",
            report::summary_text(&output, &metrics, &set, h_class)
        );
        println!("artifacts written to {}", args.output_dir.display());
    }
    Ok(())
}

fn cmd_bounds(path: &Option<PathBuf>) -> petc::Result<()> {
    let scenario = load(path)?;
    let set = scenario.bound_set()?;
    let h_class = validate_monitoring_period(scenario.trigger.h, &set);
    print!("{}", report::bounds_text(&set, scenario.trigger.h, h_class));
    Ok(())
}

fn cmd_sweep(args: &SweepArgs, quiet: bool) -> petc::Result<()> {
    let scenario = load(&args.scenario)?;
    let rows = sim::sweep(&scenario, args.param, &args.values);
    let ok = rows.iter().filter(|r| r.outcome.is_ok()).count();
    std::fs::create_dir_all(&args.output_dir)?;
    let path = args.output_dir.join("sweep.csv");
    std::fs::write(&path, report::sweep_csv(&rows))?;
    if !quiet {
        for row in &rows {
            match &row.outcome {
                Ok((summary, _)) => println!(
                    "{} = {:e}: {} events over {} samples",
                    row.param, row.value, summary.n_events, summary.n_samples
                ),
                Err(e) => println!("{} = {:e}: failed ({e})", row.param, row.value),
            }
        }
        println!("sweep table written to {}", path.display());
    }
    if ok == 0 {
        return Err(Error::config("sweep: every value failed"));
    }
    Ok(())
}

fn cmd_validate(path: &Option<PathBuf>, quiet: bool) -> petc::Result<()> {
    let scenario = load(path)?;
    if !quiet {
        println!(
            "scenario valid: {} dof, dt = {:e} s, t_end = {} s, mode = {:?}",
            scenario.plant.dof(),
            scenario.sim.dt,
            scenario.sim.t_end,
            scenario.trigger.mode
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args, cli.quiet),
        Command::Bounds { scenario } => cmd_bounds(scenario),
        Command::Sweep(args) => cmd_sweep(args, cli.quiet),
        Command::Validate { scenario } => cmd_validate(scenario, cli.quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => fail(&err),
    }
}

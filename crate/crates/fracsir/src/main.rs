use clap::{Args, Parser, Subcommand};
use fracsir::cli::{
    parse_config, run_equilibria, run_simulate, run_sweep, run_verify, CliError, RunConfig,
    PRESETS, SWEEP_AXES,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Implicit L1/NSFD solver for a time-fractional reaction-diffusion SIR
/// model, with equilibrium and stability diagnostics.
#[derive(Parser)]
#[command(name = "fracsir", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Key-value configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Compiled-in preset: paper-dfe | paper-ee.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory for CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the step budget.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the fractional order.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scheme and write the trajectory CSV.
    Simulate(RunArgs),
    /// Print the reproduction number and the equilibria with residuals.
    Equilibria(RunArgs),
    /// Run the scheme and certify positivity, mass bound, Lyapunov decay
    /// and the Volterra-type inequality.
    Verify(RunArgs),
    /// Run one simulation per value of a chosen parameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Parameter to vary (lambda, beta, gamma, delta, mu, r, d1, d2,
        /// d3, alpha, dt).
        #[arg(long)]
        axis: String,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
    },
}

fn load_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(fracsir::cli::ConfigError::Parse {
                    line: 0,
                    reason: format!("cannot read {}: {e}", path.display()),
                })
            })?;
            parse_config(&text)?
        }
        (None, Some(name)) => RunConfig::preset(name).ok_or_else(|| {
            CliError::Config(fracsir::cli::ConfigError::Validation {
                key: "preset".to_string(),
                reason: format!("unknown preset `{name}`; available: {}", PRESETS.join(", ")),
            })
        })?,
        (None, None) => RunConfig::default(),
        (Some(_), Some(_)) => unreachable!("clap enforces exclusivity"),
    };
    if let Some(steps) = args.steps {
        cfg.steps = steps;
    }
    if let Some(alpha) = args.alpha {
        cfg.alpha = alpha;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = load_config(&args)?;
            let summary = run_simulate(&cfg, &args.out)?;
            println!("R0 = {}", summary.r0);
            match summary.converged_at {
                Some(k) => println!("converged early at step {k}"),
                None => println!("ran the full budget of {} steps", summary.steps_run),
            }
            println!("final sup distance to E0 = {}", summary.dist_e0);
            if let Some(d) = summary.dist_estar {
                println!("final sup distance to E* = {d}");
            }
            println!(
                "trajectory written to {}",
                summary.trajectory_path.display()
            );
            Ok(())
        }
        Command::Equilibria(args) => {
            let cfg = load_config(&args)?;
            let report = run_equilibria(&cfg)?;
            println!("R0 = {}", report.r0);
            println!(
                "E0 = ({}, {}, {}), residual = ({}, {}, {})",
                report.e0.s,
                report.e0.i,
                report.e0.r,
                report.e0_residual.0,
                report.e0_residual.1,
                report.e0_residual.2
            );
            match report.endemic {
                Some((e, res)) => println!(
                    "E* = ({}, {}, {}), residual = ({}, {}, {})",
                    e.s, e.i, e.r, res.0, res.1, res.2
                ),
                None => println!("E* = none: R0 <= 1"),
            }
            Ok(())
        }
        Command::Verify(args) => {
            let cfg = load_config(&args)?;
            let report = run_verify(&cfg, &args.out)?;
            println!("R0 = {}", report.r0);
            for check in &report.checks {
                let verdict = if check.passed { "pass" } else { "FAIL" };
                println!("check {}: {} ({})", check.name, verdict, check.detail);
            }
            println!(
                "diagnostics written to {}",
                report.diagnostics_path.display()
            );
            if let Some(fail) = report.first_failure() {
                eprintln!(
                    "invariant violation: {} at step {}",
                    fail.name,
                    fail.step.map_or("?".to_string(), |s| s.to_string())
                );
                std::process::exit(4);
            }
            Ok(())
        }
        Command::Sweep { run, axis, values } => {
            let cfg = load_config(&run)?;
            if !SWEEP_AXES.contains(&axis.as_str()) {
                return Err(CliError::Config(fracsir::cli::ConfigError::Validation {
                    key: "axis".to_string(),
                    reason: format!(
                        "unrecognized sweep axis `{axis}`; available: {}",
                        SWEEP_AXES.join(", ")
                    ),
                }));
            }
            let report = run_sweep(&cfg, &axis, &values, &run.out)?;
            let failures = report.rows.iter().filter(|r| r.status != "ok").count();
            println!(
                "{} runs ({} reported in-row failures), results in {}",
                report.rows.len(),
                failures,
                report.csv_path.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

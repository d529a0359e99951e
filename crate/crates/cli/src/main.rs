//! Command-line harness for near-field coupling analysis.
//!
//! Exit codes: 0 success, 1 failed verdict in `check`, 2 usage error,
//! 3 numeric or conditioning error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use coupling_lab::criteria::{CouplingReport, LinkRole};
use coupling_lab::error::Error;
use coupling_lab::output::{emit_csv, emit_plot};
use coupling_lab::region::classify_region;
use coupling_lab::selfcheck::{run_self_check, REDUCTION_RTOL, SELF_CHECK_RTOL};
use coupling_lab::sweep::{format_complex, run_sweep, ScenarioConfig};

/// Seed and instance count of the `verify` suite.
const VERIFY_SEED: u64 = 0x5eed;
const VERIFY_INSTANCES: usize = 100;

#[derive(Parser)]
#[command(
    name = "coupling-lab",
    about = "Near-field coupling sweeps and unilateral-approximation checks for massive MISO/SIMO arrays",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an N-sweep and emit CSV (and optionally an SVG chart).
    Sweep(SweepArgs),
    /// Evaluate the coupling condition at a single element count.
    Check(CheckArgs),
    /// Run the built-in numerical self-tests.
    Verify,
    /// Classify a link against the Fresnel and Fraunhofer boundaries.
    Region(RegionArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["scenario", "config"])))]
struct ScenarioArgs {
    /// Built-in scenario: scenario1 (fixed spacing) or scenario2 (fixed aperture).
    #[arg(long)]
    scenario: Option<String>,

    /// Path to a flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override the link distance in meters.
    #[arg(long)]
    distance: Option<f64>,

    /// Override the smallest element count of the grid.
    #[arg(long)]
    n_min: Option<usize>,

    /// Override the largest element count of the grid.
    #[arg(long)]
    n_max: Option<usize>,

    /// Override the number of grid points.
    #[arg(long)]
    points: Option<usize>,

    /// Override the margin threshold of the verdict.
    #[arg(long)]
    threshold: Option<f64>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig<f64>, Error> {
        let mut config = match (&self.scenario, &self.config) {
            (Some(name), None) => ScenarioConfig::preset(name)?,
            (None, Some(path)) => ScenarioConfig::from_config_file(path)?,
            _ => unreachable!("clap enforces exactly one source"),
        };
        if let Some(distance) = self.distance {
            config.distance_m = distance;
        }
        if let Some(n_min) = self.n_min {
            config.n_min = n_min;
        }
        if let Some(n_max) = self.n_max {
            config.n_max = n_max;
        }
        if let Some(points) = self.points {
            config.points = points;
        }
        if let Some(threshold) = self.threshold {
            config.threshold = threshold;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    /// Write the CSV table here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,

    /// Also write a log-log SVG chart here.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,

    /// Element count to evaluate.
    #[arg(long)]
    n: usize,
}

#[derive(Args)]
struct RegionArgs {
    /// Array aperture in meters.
    #[arg(long)]
    aperture: f64,

    /// Wavelength in meters.
    #[arg(long)]
    wavelength: f64,

    /// Link distance in meters.
    #[arg(long)]
    distance: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap prints the message and reports 2 for usage errors, 0 for
        // --help/--version.
        Err(err) => err.exit(),
    };
    let result = match cli.command {
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Check(args) => cmd_check(&args),
        Command::Verify => cmd_verify(),
        Command::Region(args) => cmd_region(&args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(classify_error(&err))
        }
    }
}

fn classify_error(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Io(_) => 2,
        Error::SweepRow { source, .. } => classify_error(source),
        _ => 3,
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode, Error> {
    let config = args.scenario.load()?;
    let rows = run_sweep(&config)?;

    match &args.csv {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            emit_csv(&rows, &mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            emit_csv(&rows, &mut out)?;
        }
    }
    if let Some(path) = &args.svg {
        let mut out = BufWriter::new(File::create(path)?);
        emit_plot(&rows, &config, &mut out)?;
        out.flush()?;
    }

    let failing = rows.iter().filter(|r| !r.verdict).count();
    eprintln!(
        "{}: {} points over N in [{}, {}], {} below the {}x margin",
        config.name,
        rows.len(),
        config.n_min,
        config.n_max,
        failing,
        config.threshold
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(args: &CheckArgs) -> Result<ExitCode, Error> {
    let config = args.scenario.load()?;
    let report = config.report_at(args.n)?;
    print_report(&config, &report);
    if report.verdict {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn print_report(config: &ScenarioConfig<f64>, report: &CouplingReport<f64>) {
    let role = match report.role {
        LinkRole::Miso => "MISO",
        LinkRole::Simo => "SIMO",
    };
    println!("{} @ N = {} ({role})", config.name, report.n);
    println!("  spacing d      = {:.6e} m", report.spacing_m);
    println!("  aperture D     = {:.6e} m", report.aperture_m);
    println!(
        "  terminations   = Z_G {} ohm, Z_L {} ohm",
        format_complex(config.z_generator),
        format_complex(config.z_load)
    );
    println!(
        "  region         = {}{} (fresnel {:.4e} m, fraunhofer {:.4e} m)",
        report.region.region.label(),
        if report.region.boundary_case {
            " [boundary case]"
        } else {
            ""
        },
        report.region.fresnel_distance,
        report.region.fraunhofer_distance
    );
    println!("  lhs            = {:.6e} ohm", report.sides.lhs);
    match report.sides.rhs_exact {
        Some(v) => println!("  rhs_exact      = {v:.6e} ohm"),
        None => println!("  rhs_exact      = (skipped, N above exact cap)"),
    }
    println!("  rhs_bound      = {:.6e} ohm", report.sides.rhs_bound);
    if let Some(v) = report.poisson_limit {
        println!("  poisson_limit  = {v:.6e} ohm");
    }
    println!(
        "  margin_bound   = {:.4e} (threshold {})",
        report.sides.margin_bound, report.threshold
    );
    if let Some(v) = report.sides.margin_exact {
        println!("  margin_exact   = {v:.4e}");
    }
    println!(
        "  verdict        = {}",
        if report.verdict { "PASS" } else { "FAIL" }
    );
}

fn cmd_verify() -> Result<ExitCode, Error> {
    let outcome = run_self_check::<f64>(VERIFY_SEED, VERIFY_INSTANCES)?;
    println!(
        "push-through identity   max residual {:.3e} (tol {SELF_CHECK_RTOL:.0e})",
        outcome.max_identity_residual
    );
    println!(
        "transfer-matrix forms   max deviation {:.3e} (tol {SELF_CHECK_RTOL:.0e})",
        outcome.max_form_disagreement
    );
    println!(
        "decoupled reduction     max deviation {:.3e} (tol {REDUCTION_RTOL:.0e})",
        outcome.max_reduction_error
    );
    if outcome.passed() {
        println!("self-check PASS over {} instances", outcome.instances);
        Ok(ExitCode::SUCCESS)
    } else {
        println!("self-check FAIL over {} instances", outcome.instances);
        Ok(ExitCode::from(3))
    }
}

fn cmd_region(args: &RegionArgs) -> Result<ExitCode, Error> {
    let c = classify_region(args.aperture, args.wavelength, args.distance)?;
    println!("fresnel_distance    = {:.6e} m", c.fresnel_distance);
    println!("fraunhofer_distance = {:.6e} m", c.fraunhofer_distance);
    println!(
        "region              = {}{}",
        c.region.label(),
        if c.boundary_case {
            " [boundary case]"
        } else {
            ""
        }
    );
    Ok(ExitCode::SUCCESS)
}

//! Command-line interface for the two-sample covariance test.
//!
//! Exit codes: 0 success, 1 validation-suite failure, 2 usage or input
//! error, 3 numerical degeneracy in otherwise well-formed input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use covtest::dist::RngStream;
use covtest::error::Error;
use covtest::io::{read_matrix, write_outcome, DatasetFile, OutputFormat};
use covtest::sim::{run_simulation, Method, SimConfig};
use covtest::validate::run_suites;
use covtest::{run_test, DataDist, ModelId};

#[derive(Parser)]
#[command(
    name = "covtest",
    version,
    about = "Two-sample covariance test for high-dimensional data",
    long_about = "Tests equality of two covariance matrices by combining a \
Frobenius-norm U-statistic detector with leading-eigenvalue detectors via \
Fisher's method. Ships a Monte-Carlo simulation harness and an embedded \
validation suite."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the combined test on two datasets of equal shape.
    Run(RunArgs),
    /// Estimate rejection probabilities over a signal grid by simulation.
    Simulate(SimulateArgs),
    /// Certify the build by running the embedded validation suites.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// First sample: delimited text, rows are observations.
    #[arg(long)]
    sample1: PathBuf,

    /// Second sample, same shape as the first.
    #[arg(long)]
    sample2: PathBuf,

    /// Number of leading eigenvalues to compare.
    #[arg(long, default_value_t = 1)]
    m: usize,

    /// Nominal level of the test.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Monte-Carlo draws for the multi-eigenvalue p-value (m >= 2).
    #[arg(long = "mc-draws", default_value_t = 10_000)]
    mc_draws: usize,

    /// Seed for the Monte-Carlo stream.
    #[arg(long, env = "COVTEST_SEED", default_value_t = 0)]
    seed: u64,

    /// Field delimiter of the input files.
    #[arg(long, default_value_t = ',')]
    delimiter: char,

    /// Skip the first line of each input file.
    #[arg(long = "has-header", default_value_t = false)]
    has_header: bool,

    /// Output format.
    #[arg(long, default_value = "text", value_parser = ["json", "text"])]
    format: String,

    /// Also write the outcome to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Covariance model (m1..m5).
    #[arg(long)]
    model: String,

    /// Comma-separated signal strengths, e.g. "0,5,10,20".
    #[arg(long = "delta-grid", default_value = "0")]
    delta_grid: String,

    /// Entry distribution.
    #[arg(long, default_value = "gaussian", value_parser = ["gaussian", "t7", "laplace"])]
    dist: String,

    /// Replications per grid cell.
    #[arg(long, default_value_t = 500)]
    reps: usize,

    /// Dimension of the observations.
    #[arg(long, default_value_t = 200)]
    p: usize,

    /// Sample size of each of the two samples.
    #[arg(long, default_value_t = 100)]
    n: usize,

    /// Number of leading eigenvalues compared by the combined test.
    #[arg(long, default_value_t = 1)]
    m: usize,

    /// Nominal level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Monte-Carlo draws per replication for the m >= 2 p-value.
    #[arg(long = "mc-draws", default_value_t = 10_000)]
    mc_draws: usize,

    /// Master seed; every replication derives its own stream from it.
    #[arg(long, env = "COVTEST_SEED", default_value_t = 0)]
    seed: u64,

    /// Cap the worker threads (default: all cores). Results do not depend
    /// on the worker count.
    #[arg(long)]
    workers: Option<usize>,

    /// Output stem; writes <out>.csv and <out>.json.
    #[arg(long, default_value = "simreport")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Restrict to one suite (ustat, theta, psi, dist).
    #[arg(long)]
    suite: Option<String>,

    /// Seed for the suites' generated instances.
    #[arg(long, env = "COVTEST_SEED", default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_degenerate() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, Error> {
    let format: OutputFormat = args.format.parse()?;
    let dataset = |path: &PathBuf| DatasetFile {
        path: path.clone(),
        delimiter: args.delimiter,
        has_header: args.has_header,
    };
    let x1 = read_matrix(&dataset(&args.sample1))?;
    let x2 = read_matrix(&dataset(&args.sample2))?;

    let mut rng = RngStream::new(args.seed, 0);
    let outcome = run_test(&x1, &x2, args.m, args.alpha, args.mc_draws, &mut rng)?;
    let rendered = write_outcome(&outcome, format);
    print!("{rendered}");
    if let Some(path) = &args.out {
        std::fs::write(path, &rendered).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, Error> {
    let model: ModelId = args.model.parse()?;
    let dist: DataDist = args.dist.parse()?;
    let deltas = parse_delta_grid(&args.delta_grid)?;

    if let Some(workers) = args.workers {
        if workers == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Error::Config(format!("could not size the worker pool: {e}")))?;
    }
    if args.p > 400 || args.n > 200 {
        eprintln!(
            "warning: p = {}, n = {} is beyond desk scale; expect long runtimes",
            args.p, args.n
        );
    }

    let config = SimConfig {
        model,
        deltas,
        dist,
        p: args.p,
        n: args.n,
        reps: args.reps,
        alpha: args.alpha,
        m: args.m,
        draws: args.mc_draws,
        master_seed: args.seed,
    };
    let report = run_simulation(&config, &Method::ALL)?;

    for cell in &report.cells {
        println!(
            "model={} delta={} method={} dist={} rate={:.4} reps={} ({:.1}s)",
            cell.model, cell.delta, cell.method, cell.dist, cell.rate, cell.reps,
            cell.runtime_secs
        );
    }

    let csv_path = args.out.with_extension("csv");
    let json_path = args.out.with_extension("json");
    for (path, contents) in [(&csv_path, report.to_csv()), (&json_path, report.to_json())] {
        std::fs::write(path, contents).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(ExitCode::SUCCESS)
}

fn parse_delta_grid(grid: &str) -> Result<Vec<f64>, Error> {
    let mut deltas = Vec::new();
    for part in grid.split(',') {
        let trimmed = part.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: f64 = trimmed
            .parse()
            .map_err(|_| Error::Config(format!("cannot parse delta '{trimmed}'")))?;
        deltas.push(value);
    }
    if deltas.is_empty() {
        return Err(Error::Config("empty delta grid".into()));
    }
    Ok(deltas)
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode, Error> {
    let reports = run_suites(args.suite.as_deref(), args.seed)?;
    let mut failed = Vec::new();
    for r in &reports {
        println!(
            "[{}] {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        if !r.passed {
            failed.push(r.name);
        }
    }
    if failed.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("validation failed: {}", failed.join(", "));
        Ok(ExitCode::from(1))
    }
}

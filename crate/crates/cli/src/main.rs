//! Command-line front end: trace norms, spline interpolation, extension
//! oracles, sweeps and the clustered-node scenario.
//!
//! Input files are `lambda,value` CSV with a header, nodes ascending.
//! Numbers are printed with 17 significant digits so outputs are
//! byte-stable and round-trip safe. Exit codes: 0 success, 2 input
//! validation error, 3 solver non-convergence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sobtrace::experiments::{
    counterexample_scenario, fmt_f64, report_to_csv, run_sweep, to_json_17, SweepConfig,
};
use sobtrace::{oracle_l, oracle_w, phi1, phi2, Error, NormParams, TraceData};

#[derive(Parser)]
#[command(
    name = "sobtrace",
    version,
    about = "Trace norms and quasi-optimal spline interpolators on node sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an equivalent trace norm of the data
    Norm(NormArgs),
    /// Interpolate the data and sample the spline
    Interp(InterpArgs),
    /// Minimize the extension energy directly
    Oracle(OracleArgs),
    /// Run a seeded sweep described by a JSON config
    Sweep(SweepArgs),
    /// Clustered-node scenario probing the simplified norm
    Counterexample(CounterexampleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichNorm {
    /// Homogeneous seminorm over divided-difference stencils
    EqL,
    /// Non-homogeneous norm with lower-order terms
    EqW,
    /// Simplified second-order norm with plain value terms
    SimpW,
}

#[derive(Args)]
struct NormArgs {
    /// Norm to evaluate
    #[arg(long, value_enum)]
    which: WhichNorm,
    /// Derivative order (1 or 2; simp-w requires 2)
    #[arg(long, default_value_t = 2)]
    r: usize,
    /// Integrability exponent, finite and >= 1
    #[arg(long)]
    p: f64,
    /// Uniform step bound enforced by the W norms
    #[arg(long)]
    k: Option<f64>,
    /// Input CSV (`lambda,value`)
    input: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Phi1,
    Phi2,
}

#[derive(Args)]
struct InterpArgs {
    /// Interpolator to build
    #[arg(long, value_enum)]
    method: Method,
    /// Number of equally spaced sample points over the window
    #[arg(long)]
    samples: usize,
    /// Write sampled values here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write piece coefficients (JSON) here; defaults to the output path
    /// with extension `pieces.json` when --output is given
    #[arg(long)]
    coeffs: Option<PathBuf>,
    /// Input CSV (`lambda,value`)
    input: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichOracle {
    /// Homogeneous seminorm infimum
    L,
    /// Full W-norm infimum
    W,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long)]
    p: f64,
    /// Interior grid samples per gap for the IRLS solver
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Relative objective-change tolerance
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Which infimum to compute
    #[arg(long, value_enum, default_value = "l")]
    which: WhichOracle,
    #[arg(long)]
    k: Option<f64>,
    /// Input CSV (`lambda,value`)
    input: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep configuration (JSON)
    config: PathBuf,
    /// Per-case CSV report path
    #[arg(long, default_value = "sweep_cases.csv")]
    out_csv: PathBuf,
    /// Aggregate JSON report path
    #[arg(long, default_value = "sweep_aggregate.json")]
    out_json: PathBuf,
}

#[derive(Args)]
struct CounterexampleArgs {
    /// Cluster padding; nodes accumulate toward ±(1+h)
    #[arg(long)]
    h: f64,
    #[arg(long)]
    p: f64,
    /// Cluster nodes per side
    #[arg(long, default_value_t = 8)]
    m: usize,
    /// Interior grid samples per gap for the W oracle
    #[arg(long, default_value_t = 32)]
    grid: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

enum CliError {
    Core(Error),
    Io(PathBuf, std::io::Error),
    Config(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::DidNotConverge(_)) => 3,
            CliError::Core(Error::QuadratureTolerance { .. }) => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Config(msg) => f.write_str(msg),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

fn read_data(path: &Path) -> Result<TraceData, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    Ok(TraceData::from_csv_str(&text)?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Norm(args) => cmd_norm(args),
        Command::Interp(args) => cmd_interp(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Counterexample(args) => cmd_counterexample(args),
    }
}

fn cmd_norm(args: NormArgs) -> Result<(), CliError> {
    let data = read_data(&args.input)?;
    let (value, power) = match args.which {
        WhichNorm::EqL => {
            let params = norm_params(args.r, args.p, args.k)?;
            let power = sobtrace::eq_norm_l_pow(&data, &params)?;
            (power.powf(1.0 / args.p), power)
        }
        WhichNorm::EqW => {
            let params = norm_params(args.r, args.p, args.k)?;
            let power = sobtrace::eq_norm_w_pow(&data, &params)?;
            (power.powf(1.0 / args.p), power)
        }
        WhichNorm::SimpW => {
            if args.r != 2 {
                return Err(CliError::Config(format!(
                    "simp-w is a second-order norm; got --r {}",
                    args.r
                )));
            }
            let power = sobtrace::simp_norm_w_pow(&data, args.p)?;
            (power.powf(1.0 / args.p), power)
        }
    };
    println!("value,power");
    println!("{},{}", fmt_f64(value), fmt_f64(power));
    Ok(())
}

fn norm_params(r: usize, p: f64, k: Option<f64>) -> Result<NormParams, CliError> {
    let mut params = NormParams::new(r, p)?;
    if let Some(k) = k {
        params = params.with_step_bound(k)?;
    }
    Ok(params)
}

fn cmd_interp(args: InterpArgs) -> Result<(), CliError> {
    if args.samples < 2 {
        return Err(CliError::Config(format!(
            "--samples must be at least 2, got {}",
            args.samples
        )));
    }
    let data = read_data(&args.input)?;
    let spline = match args.method {
        Method::Phi1 => phi1(&data)?,
        Method::Phi2 => phi2(&data)?,
    };
    let mut csv = String::from("x,value\n");
    let (lo, hi) = spline.domain();
    for i in 0..args.samples {
        let x = lo + (hi - lo) * i as f64 / (args.samples - 1) as f64;
        let y = spline.evaluate(x, 0)?;
        csv.push_str(&format!("{},{}\n", fmt_f64(x), fmt_f64(y)));
    }
    match &args.output {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    let coeffs_path = args.coeffs.clone().or_else(|| {
        args.output
            .as_ref()
            .map(|p| p.with_extension("pieces.json"))
    });
    if let Some(path) = coeffs_path {
        write_file(&path, &format!("{}\n", to_json_17(&spline)))?;
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let data = read_data(&args.input)?;
    let params = norm_params(args.r, args.p, args.k)?;
    let result = match args.which {
        WhichOracle::L => oracle_l(&data, &params, args.grid, args.tol)?,
        WhichOracle::W => oracle_w(&data, &params, args.grid, args.tol)?,
    };
    println!("{}", to_json_17(&result));
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let text =
        fs::read_to_string(&args.config).map_err(|e| CliError::Io(args.config.clone(), e))?;
    let config: SweepConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let report = run_sweep(&config)?;
    write_file(&args.out_csv, &report_to_csv(&report))?;
    write_file(
        &args.out_json,
        &format!("{}\n", to_json_17(&report.aggregate)),
    )?;
    println!(
        "wrote {} cases ({} flagged) to {} and {}",
        report.aggregate.cases,
        report.aggregate.failed_cases,
        args.out_csv.display(),
        args.out_json.display()
    );
    Ok(())
}

fn cmd_counterexample(args: CounterexampleArgs) -> Result<(), CliError> {
    let record = counterexample_scenario(args.h, args.m, args.p, args.grid)?;
    println!("{}", to_json_17(&record));
    Ok(())
}

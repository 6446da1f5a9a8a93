//! Command line driver: simulate partial-boundary electrostatic data for a
//! corroded buried object, assemble the data gap, image the corrosion, and
//! self-check the pipeline.

mod assemble;
mod config;
mod error;
mod forward;
mod image;
mod manifest;
mod verify;

use clap::{Args, Parser, Subcommand};
use config::{resolve_problem, MethodName, ProblemOverrides, ResolvedProblem};
use error::AppError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "corrobem",
    version,
    about = "Corrosion imaging of partially buried 2D objects by boundary elements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the healthy and corroded forward problems for one current
    Forward(ForwardArgs),
    /// Assemble the Galerkin gap matrix and its singular spectrum
    Assemble(AssembleArgs),
    /// Sweep a sampling indicator over a grid and score the reconstruction
    Image(ImageArgs),
    /// Run the solver self-checks and archive the reports
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (TOML)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in example id
    #[arg(long, value_parser = clap::value_parser!(u8))]
    example: Option<u8>,
    /// Constant corrosion coefficient on the corroded arc
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Panels per arc
    #[arg(long)]
    nf: Option<usize>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to one per core
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ForwardArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Fourier mode of the injected current
    #[arg(long)]
    mode: Option<usize>,
}

#[derive(Args)]
struct AssembleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Highest Fourier order of the Galerkin basis
    #[arg(long)]
    nb: Option<usize>,
}

#[derive(Args)]
struct ImageArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Highest Fourier order of the Galerkin basis
    #[arg(long)]
    nb: Option<usize>,
    /// Sampling indicator
    #[arg(long, value_enum)]
    method: Option<MethodName>,
    /// Picard truncation threshold for fmreg
    #[arg(long)]
    sv_threshold: Option<f64>,
    /// Tikhonov parameter for lsmreg
    #[arg(long)]
    alpha: Option<f64>,
    /// Level cut applied to the log indicator
    #[arg(long, allow_negative_numbers = true)]
    level: Option<f64>,
    /// Grid resolution, e.g. 100x100
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Highest Fourier order of the Galerkin basis
    #[arg(long)]
    nb: Option<usize>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (nx, ny) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NxM, got {s:?}"))?;
    let nx = nx.trim().parse().map_err(|e| format!("bad grid width: {e}"))?;
    let ny = ny.trim().parse().map_err(|e| format!("bad grid height: {e}"))?;
    Ok((nx, ny))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Forward(args) => {
            let resolved = setup(&args.common)?;
            forward::run(&resolved, args.mode, &args.common.out)
        }
        Command::Assemble(args) => {
            let resolved = setup(&args.common)?;
            assemble::run(&resolved, args.nb, &args.common.out)
        }
        Command::Image(args) => {
            let resolved = setup(&args.common)?;
            let image_args = image::ImageArgsResolved {
                nb: args.nb,
                method: args.method,
                sv_threshold: args.sv_threshold,
                alpha: args.alpha,
                level: args.level,
                grid: args.grid,
            };
            image::run(&resolved, &image_args, &args.common.out)
        }
        Command::Verify(args) => {
            let resolved = setup(&args.common)?;
            verify::run(&resolved, args.nb, &args.common.out)
        }
    }
}

fn setup(common: &CommonArgs) -> Result<ResolvedProblem, AppError> {
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| AppError::Config(format!("thread pool: {e}")))?;
    }
    let over = ProblemOverrides { example: common.example, gamma: common.gamma, nf: common.nf };
    resolve_problem(common.config.as_deref(), &over)
}

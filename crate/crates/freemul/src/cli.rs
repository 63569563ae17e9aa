//! The `freemul` command line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use freemul_core::{
    approx_density_from_moments, cumulants_from_moments, free_mult_convolve_with_tol,
    mixed_moment_xy, moments_of, s_transform, solve_density, uniform_grid,
    verify_proof_identities, CaseTag, DensityCurve, IdentityReport, MomentSequence, Word,
    DEFAULT_EPSILON, DEFAULT_GRID_STEP, DEFAULT_ORACLE_ORDER, DEFAULT_ORDER, DEFAULT_TOL,
};
use serde::Serialize;

use crate::error::Result;
use crate::io;
use crate::rmt::{compare_histogram, product_spectrum, EnsemblePair, SimConfig};

/// Environment variable that replaces the `simulate` seed when set.
pub const SEED_ENV: &str = "FREEMUL_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "freemul",
    version,
    about = "Free multiplicative convolution through the S-transform"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moments of a named law.
    Moments(MomentsArgs),
    /// S-transform of a law or moment sequence.
    Stransform(StransformArgs),
    /// Moments of the product of two free factors.
    Convolve(ConvolveArgs),
    /// Density from an algebraic curve or from moments.
    Density(DensityArgs),
    /// Random-matrix Monte Carlo against a predicted density.
    Simulate(SimulateArgs),
    /// Check the auxiliary-series identities, branch agreement and the
    /// partition oracle for a pair of factors.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    /// Law as JSON, e.g. '{"kind":"Semicircle","variance":1}', or a path.
    #[arg(long)]
    pub law: String,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct StransformArgs {
    /// Law JSON or `{"moments":[..]}` JSON, inline or a path.
    #[arg(long)]
    pub input: String,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ConvolveArgs {
    /// First factor: law JSON or `{"moments":[..]}` JSON, inline or a path.
    #[arg(long)]
    pub a: String,
    /// Second factor, same forms as `--a`.
    #[arg(long)]
    pub b: String,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    /// Tolerance for the agreement of the two branches.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Left end of the grid.
    #[arg(long, default_value_t = -4.0005, allow_hyphen_values = true)]
    pub lo: f64,
    /// Right end of the grid.
    #[arg(long, default_value_t = 5.0005, allow_hyphen_values = true)]
    pub hi: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub step: f64,
    /// Height above the real axis at which the Cauchy transform is taken.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// Built-in curve name, `{"coeffs":[[..]]}` JSON, or a path.
    #[arg(long, conflicts_with = "moments", required_unless_present = "moments")]
    pub curve: Option<String>,
    /// Law or moment JSON (inline or a path) for the continued-fraction
    /// approximation.
    #[arg(long)]
    pub moments: Option<String>,
    /// Number of moments used when `--moments` is a law.
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "wigner_x_wishart")]
    pub ensemble: EnsemblePair,
    /// Matrix size.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 4000)]
    pub trials: u64,
    /// Seed; the FREEMUL_SEED environment variable takes precedence.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    /// Predicted density curve; defaults to the built-in curve of the
    /// ensemble.
    #[arg(long)]
    pub curve: Option<String>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Write the pooled eigenvalues here as CSV.
    #[arg(long)]
    pub eigenvalues: Option<PathBuf>,
    /// Write the histogram comparison here as JSON.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    /// Worker threads for the trials (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[arg(long, default_value_t = DEFAULT_ORACLE_ORDER)]
    pub order: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// How a successful run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    VerificationFailed,
}

fn with_output(out: &OutputArgs, stdout: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match &out.output {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            f(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => f(stdout),
    }
}

/// Runs a parsed command, writing results to `stdout` (or `--output`).
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<Outcome> {
    match cli.command {
        Command::Moments(args) => cmd_moments(args, stdout),
        Command::Stransform(args) => cmd_stransform(args, stdout),
        Command::Convolve(args) => cmd_convolve(args, stdout),
        Command::Density(args) => cmd_density(args, stdout),
        Command::Simulate(args) => cmd_simulate(args, stdout),
        Command::Verify(args) => cmd_verify(args, stdout),
    }
}

fn cmd_moments(args: MomentsArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let law = io::read_law(&args.law)?;
    let m = moments_of(&law, args.order)?;
    with_output(&args.out, stdout, |w| match args.out.format.unwrap_or(Format::Csv) {
        Format::Csv => io::write_moments_csv(&m, w),
        Format::Json => io::write_json(&m, w),
    })?;
    Ok(Outcome::Success)
}

fn cmd_stransform(args: StransformArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let m = io::read_factor(&args.input, args.order)?;
    let s = s_transform(&m)?;
    with_output(&args.out, stdout, |w| match args.out.format.unwrap_or(Format::Json) {
        Format::Csv => io::write_s_transform_csv(&s, w),
        Format::Json => io::write_json(&s, w),
    })?;
    Ok(Outcome::Success)
}

fn cmd_convolve(args: ConvolveArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let ma = io::read_factor(&args.a, args.order)?;
    let mb = io::read_factor(&args.b, args.order)?;
    let result = free_mult_convolve_with_tol(&ma, &mb, args.order, args.tol)?;
    with_output(&args.out, stdout, |w| match args.out.format.unwrap_or(Format::Json) {
        Format::Csv => {
            writeln!(w, "case_tag,{}", result.case_tag.as_str())?;
            io::write_moments_csv(&result.moments, w)
        }
        Format::Json => io::write_json(&result, w),
    })?;
    Ok(Outcome::Success)
}

fn grid(args: &GridArgs) -> Result<Vec<f64>> {
    Ok(uniform_grid(args.lo, args.hi, args.step)?)
}

fn write_density(d: &DensityCurve, out: &OutputArgs, stdout: &mut dyn Write) -> Result<()> {
    with_output(out, stdout, |w| match out.format.unwrap_or(Format::Csv) {
        Format::Csv => io::write_density_csv(d, w),
        Format::Json => io::write_json(d, w),
    })
}

fn cmd_density(args: DensityArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let xs = grid(&args.grid)?;
    let density = match (&args.curve, &args.moments) {
        (Some(curve), _) => solve_density(&io::read_curve(curve)?, &xs, args.grid.epsilon)?,
        (None, Some(moments)) => {
            let m = io::read_factor(moments, args.order)?;
            approx_density_from_moments(&m, &xs, args.grid.epsilon)?
        }
        (None, None) => unreachable!("clap requires --curve or --moments"),
    };
    write_density(&density, &args.out, stdout)?;
    Ok(Outcome::Success)
}

#[derive(Debug, Serialize)]
struct SimulationReport {
    config: SimConfig,
    eigenvalue_count: usize,
    /// Empirical `m₁ … m₄` of the pooled spectrum.
    empirical_moments: [f64; 4],
    l1_distance: f64,
    ks_distance: f64,
    out_of_range_fraction: f64,
    density_mass: f64,
}

fn seed_from_env(flag: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| crate::Error::InvalidConfig("FREEMUL_SEED must be an unsigned integer")),
        Err(_) => Ok(flag),
    }
}

fn default_curve(pair: EnsemblePair) -> &'static str {
    match pair {
        EnsemblePair::WignerXWishart => "semicircle_x_freepoisson",
        EnsemblePair::WishartXShiftedWishart => "freepoisson_x_shiftedfreepoisson",
    }
}

fn cmd_simulate(args: SimulateArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let config = SimConfig {
        n: args.n,
        trials: args.trials,
        seed: seed_from_env(args.seed)?,
        ensemble_pair: args.ensemble,
        bins: args.bins,
    };
    config.validate()?;
    let curve = io::read_curve(args.curve.as_deref().unwrap_or(default_curve(args.ensemble)))?;
    let density = solve_density(&curve, &grid(&args.grid)?, args.grid.epsilon)?;

    let sample = match args.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|_| crate::Error::InvalidConfig("cannot build thread pool"))?
            .install(|| product_spectrum(&config))?,
        None => product_spectrum(&config)?,
    };
    let histogram = compare_histogram(&sample.eigenvalues, &density, config.bins)?;

    if let Some(path) = &args.eigenvalues {
        let mut file = BufWriter::new(File::create(path)?);
        io::write_eigenvalues_csv(&sample.eigenvalues, &mut file)?;
        file.flush()?;
    }
    if let Some(path) = &args.histogram {
        let mut file = BufWriter::new(File::create(path)?);
        io::write_json(&histogram, &mut file)?;
        file.flush()?;
    }

    let report = SimulationReport {
        config,
        eigenvalue_count: sample.eigenvalues.len(),
        empirical_moments: [1, 2, 3, 4].map(|k| sample.moment(k)),
        l1_distance: histogram.l1_distance,
        ks_distance: histogram.ks_distance,
        out_of_range_fraction: histogram.out_of_range_fraction,
        density_mass: histogram.density_mass,
    };
    with_output(&args.out, stdout, |w| match args.out.format.unwrap_or(Format::Json) {
        Format::Json => io::write_json(&report, w),
        Format::Csv => {
            writeln!(w, "metric,value")?;
            writeln!(w, "l1_distance,{}", report.l1_distance)?;
            writeln!(w, "ks_distance,{}", report.ks_distance)?;
            writeln!(w, "out_of_range_fraction,{}", report.out_of_range_fraction)?;
            for (k, m) in report.empirical_moments.iter().enumerate() {
                writeln!(w, "m{},{}", k + 1, m)?;
            }
            Ok(())
        }
    })?;
    Ok(Outcome::Success)
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    order: usize,
    tol: f64,
    case_tag: CaseTag,
    identities: IdentityReport,
    /// Moment difference between the two branches (one zero-mean factor).
    branch_residual: Option<f64>,
    /// Largest difference between the S-route moments and the partition
    /// oracle.
    oracle_residual: f64,
    passed: bool,
}

fn cmd_verify(args: VerifyArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let ma = io::read_factor(&args.a, args.order)?;
    let mb = io::read_factor(&args.b, args.order)?;
    let identities = verify_proof_identities(&ma, &mb, args.order)?;
    let result = free_mult_convolve_with_tol(&ma, &mb, args.order, f64::INFINITY)?;
    let oracle_residual = oracle_residual(&ma, &mb, &result.moments, args.order)?;
    let branch_residual = result.branch_residual;
    let passed = identities.passed(args.tol)
        && branch_residual.is_none_or(|r| r < args.tol)
        && oracle_residual < args.tol;
    let report = VerifyReport {
        order: args.order,
        tol: args.tol,
        case_tag: result.case_tag,
        identities,
        branch_residual,
        oracle_residual,
        passed,
    };
    with_output(&args.out, stdout, |w| match args.out.format.unwrap_or(Format::Json) {
        Format::Json => io::write_json(&report, w),
        Format::Csv => {
            writeln!(w, "check,residual")?;
            for (name, r) in report.identities.residuals() {
                writeln!(w, "{name},{}", r.residual)?;
            }
            if let Some(r) = report.branch_residual {
                writeln!(w, "branch_residual,{r}")?;
            }
            writeln!(w, "oracle_residual,{}", report.oracle_residual)?;
            writeln!(w, "passed,{}", report.passed)?;
            Ok(())
        }
    })?;
    Ok(if passed {
        Outcome::Success
    } else {
        Outcome::VerificationFailed
    })
}

fn oracle_residual(
    ma: &MomentSequence,
    mb: &MomentSequence,
    got: &MomentSequence,
    order: usize,
) -> Result<f64> {
    let ka = cumulants_from_moments(&ma.truncated(order)?);
    let kb = cumulants_from_moments(&mb.truncated(order)?);
    let mut worst = 0.0f64;
    for n in 1..=order {
        let oracle = mixed_moment_xy(&ka, &kb, Word::XyPower, n)?;
        let value = got.as_slice()[n - 1];
        worst = worst.max((value - oracle).abs() / value.abs().max(1.0));
    }
    Ok(worst)
}

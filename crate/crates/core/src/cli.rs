//! Command-line front end.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::estimator::{minimize_l1, EstimatorConfig};
use crate::harness::{self, ExperimentConfig, RawConfig};
use crate::hermite::{GeneratorKind, HermiteSpec, PathSampler, DEFAULT_REFINEMENT};
use crate::noise::make_rng;
use crate::ou::{euler_solution, exact_solution, OuSpec};
use crate::path::{format_real, GridPath};

/// Environment variable capping worker threads (0 = automatic).
pub const THREADS_ENV: &str = "HERMITE_OU_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "hermite-ou",
    version,
    about = "Hermite-driven OU simulation and minimum L1 drift estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one Hermite or OU path as `t,value` CSV.
    Simulate(SimulateArgs),
    /// Estimate the drift of an observed path.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo experiment and write its CSV report.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProcessKind {
    Hermite,
    Ou,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Exact,
    Euler,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "hermite")]
    pub process: ProcessKind,
    #[arg(long, default_value_t = 1)]
    pub q: u32,
    #[arg(long = "H", default_value_t = 0.7)]
    pub h: f64,
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    /// Partial-sum refinement factor.
    #[arg(long, default_value_t = DEFAULT_REFINEMENT)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
    /// auto, fbm, partial-sum or kernel.
    #[arg(long, default_value = "auto")]
    pub generator: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub x0: f64,
    #[arg(long, value_enum, default_value = "exact")]
    pub scheme: Scheme,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Observed path in `t,value` CSV form.
    #[arg(long)]
    pub input: PathBuf,
    /// Initial value; defaults to the first value of the path.
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    pub theta_lo: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub theta_hi: f64,
    #[arg(long, default_value_t = EstimatorConfig::DEFAULT_COARSE_POINTS)]
    pub coarse_points: usize,
    #[arg(long, default_value_t = EstimatorConfig::DEFAULT_REFINE_TOL)]
    pub refine_tol: f64,
    /// Also write the result as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// consistency, limit-dist, maximal or covariance-audit.
    #[arg(long)]
    pub kind: Option<String>,
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set eps=0.1,0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(path, text).map_err(|e| Error::io(path, e))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let spec = HermiteSpec::new(args.q, args.h)?;
    let kind: GeneratorKind = args.generator.parse()?;
    let sampler = PathSampler::new(kind, &spec, args.n, args.t_max, args.m)?;
    let mut comments = vec![
        "hermite-ou simulate".to_string(),
        format!("seed={} stream={}", args.seed, args.stream),
        format!(
            "process q={} H={} n={} t_max={}",
            args.q, args.h, args.n, args.t_max
        ),
    ];
    let ou = match args.process {
        ProcessKind::Hermite => None,
        ProcessKind::Ou => Some(OuSpec::new(args.theta, args.eps, args.x0)?),
    };
    let z = sampler.sample(&mut make_rng(args.seed, args.stream));
    let path = match ou {
        None => z,
        Some(ou) => {
            comments.push(format!(
                "ou theta={} eps={} x0={} scheme={:?}",
                args.theta, args.eps, args.x0, args.scheme
            ));
            match args.scheme {
                Scheme::Exact => exact_solution(&ou, &z)?,
                Scheme::Euler => euler_solution(&ou, &z)?,
            }
        }
    };
    if let Some(p) = path.provenance() {
        comments.push(format!("generator={}", p.generator));
    }
    let text = path.to_csv(&comments);
    emit(&text, args.out.as_deref())?;
    if let Some(out) = &args.out {
        GridPath::read_csv(out)?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let cfg = EstimatorConfig::new(
        args.theta_lo,
        args.theta_hi,
        args.coarse_points,
        args.refine_tol,
    )?;
    let x = GridPath::read_csv(&args.input)?;
    let x0 = args.x0.unwrap_or(x.values()[0]);
    let r = minimize_l1(&x, x0, &cfg)?;
    println!("theta_hat = {}", format_real(r.theta_hat));
    println!("S(theta_hat) = {}", format_real(r.objective_value));
    println!("evaluations = {}", r.n_evals);
    if r.at_boundary(&cfg) {
        println!(
            "warning: minimizer bracket touches the boundary of [{}, {}]",
            cfg.theta_lo, cfg.theta_hi
        );
    }
    if let Some(out) = &args.out {
        let text = format!(
            "# hermite-ou estimate input={} x0={}\ntheta_hat,objective,n_evals,bracket_lo,bracket_hi\n{},{},{},{},{}\n",
            args.input.display(),
            x0,
            format_real(r.theta_hat),
            format_real(r.objective_value),
            r.n_evals,
            format_real(r.bracket.0),
            format_real(r.bracket.1),
        );
        emit(&text, Some(out))?;
    }
    Ok(())
}

/// Resolves file values, then `--set`, then the dedicated flags.
pub fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut raw = match &args.config {
        Some(path) => RawConfig::read(path)?,
        None => RawConfig::default(),
    };
    for pair in &args.overrides {
        raw.set_pair(pair)?;
    }
    if let Some(kind) = &args.kind {
        raw.set("kind", kind)?;
    }
    if let Some(seed) = args.seed {
        raw.set("seed", &seed.to_string())?;
    }
    if let Some(r) = args.replications {
        raw.set("replications", &r.to_string())?;
    }
    if let Some(dir) = &args.out_dir {
        raw.set("out_dir", &dir.display().to_string())?;
    }
    ExperimentConfig::from_raw(&raw)
}

pub fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let cfg = experiment_config(args)?;
    let report = harness::run(&cfg)?;
    let path = report.write(&cfg)?;
    for check in &report.checks {
        println!("{}", check.line());
    }
    println!("wrote {} ({} rows)", path.display(), report.rows.len());
    Ok(())
}

/// Reads the thread cap from the environment.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Error::Config(format!(
                "{THREADS_ENV} must be a nonnegative integer, got `{v}`"
            ))
        }),
        Err(_) => Ok(None),
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(threads) = threads_from_env()? {
        crate::par::configure_threads(threads);
    }
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Experiment(a) => cmd_experiment(a),
    }
}

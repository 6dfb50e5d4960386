//! `papc` experiment runner.
//!
//! Each subcommand builds one problem, solves it and writes its outputs into
//! `--out`. Parameters come from flags, optionally layered over a
//! `key=value` file given with `--config` (flags win).
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
//! 4 I/O error.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod config;
pub mod output;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "papc",
    version,
    about = "Proximal alternating predictor-corrector experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// 1D total-variation denoising, min λ‖∂x‖₁ + ½‖x − b‖².
    DenoiseTv(DenoiseTvArgs),
    /// 1D multiresolution-constrained denoising (SMRE).
    Smre1d(Smre1dArgs),
    /// 2D multiresolution-constrained deconvolution (SMRE).
    Smre2d(Smre2dArgs),
    /// Rate-optimal (τ, σ, α) from condition numbers, plus an iteration budget.
    Tune(TuneArgs),
    /// Sampled pointwise quadratic supportability check.
    Certify(CertifyArgs),
}

/// Step size: a number or `tuned`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauChoice {
    Value(f64),
    Tuned,
}

impl FromStr for TauChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("tuned") {
            return Ok(TauChoice::Tuned);
        }
        s.parse::<f64>()
            .map(TauChoice::Value)
            .map_err(|_| format!("expected a number or `tuned`, got {s:?}"))
    }
}

impl fmt::Display for TauChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauChoice::Value(v) => write!(f, "{v}"),
            TauChoice::Tuned => f.write_str("tuned"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignalArg {
    Blocks,
    Ramp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    /// ½‖∇x‖²
    Quadratic,
    /// Huber-smoothed total variation
    Huber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ForwardArg {
    /// Gaussian or user PSF convolution
    Psf,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CertifyObjective {
    /// ½‖x − b‖²
    Quadratic,
    Huber,
    ModifiedHuber,
    /// Σ 1 − exp(−x²)
    Bump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Primal,
    Dual,
}

/// Options shared by the solving subcommands.
#[derive(Debug, Clone, Args)]
pub struct SolveOpts {
    /// key=value file; flags given on the command line take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Dual step σ [default: 1/(τ·λ_max(𝒜ᵀ𝒜)), or the tuned value]
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Rate-certificate parameter α > 1 [default: tuned value with --tau tuned, otherwise 2]
    #[arg(long)]
    pub rate_alpha: Option<f64>,
    /// Stop when the H-norm step ‖u^{k+1} − u^k‖_H falls below this
    #[arg(long)]
    pub stop_tol: Option<f64>,
    /// Iteration cap
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Stop after this many iterations without a new smallest step; 0 disables
    #[arg(long, default_value_t = 1000)]
    pub stagnation_window: usize,
    /// Seed of the noise generator and estimation helpers
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for the dual blocks; 0 = all cores, 1 = sequential
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DenoiseTvArgs {
    #[command(flatten)]
    pub common: SolveOpts,
    /// Signal length (samples); ignored with --input
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Standard deviation of the added Gaussian noise (signal units)
    #[arg(long, default_value_t = 0.03)]
    pub noise_sd: f64,
    /// Regularization weight λ > 0
    #[arg(long, default_value_t = 0.05)]
    pub lambda: f64,
    /// Synthetic clean signal
    #[arg(long, value_enum, default_value_t = SignalArg::Blocks)]
    pub signal: SignalArg,
    /// Noisy signal CSV (one value per line) used instead of synthetic data
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Primal step τ in (0, 1/L_f) with L_f = 1, or `tuned`
    #[arg(long, default_value = "0.9")]
    pub tau: TauChoice,
}

#[derive(Debug, Clone, Args)]
pub struct Smre1dArgs {
    #[command(flatten)]
    pub common: SolveOpts,
    /// Signal length (samples); ignored with --input
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    /// Number of window lengths L (1..=L samples)
    #[arg(long, default_value_t = 10)]
    pub levels: usize,
    /// Standard deviation of the added Gaussian noise (signal units)
    #[arg(long, default_value_t = 0.02)]
    pub noise_sd: f64,
    /// Level-1 threshold q₀ (signal units) [default: 3·noise-sd]
    #[arg(long)]
    pub q0: Option<f64>,
    /// Per-level threshold factor f, q_l = q₀ f^{l−1}
    #[arg(long, default_value_t = 0.93)]
    pub scale_f: f64,
    /// Regularity functional J
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Quadratic)]
    pub objective: ObjectiveArg,
    /// Huber smoothing width α (signal units)
    #[arg(long, default_value_t = 0.25)]
    pub huber_alpha: f64,
    /// Synthetic clean signal
    #[arg(long, value_enum, default_value_t = SignalArg::Blocks)]
    pub signal: SignalArg,
    /// Noisy signal CSV used instead of synthetic data
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Primal step τ [default: 0.8/L_f, i.e. 0.2 for the quadratic objective]
    #[arg(long)]
    pub tau: Option<TauChoice>,
}

#[derive(Debug, Clone, Args)]
pub struct Smre2dArgs {
    #[command(flatten)]
    pub common: SolveOpts,
    /// Image side n (pixels); ignored with --input
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Number of window sizes L (1×1 ..= L×L pixels)
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    /// Standard deviation of the added Gaussian noise (intensity units)
    #[arg(long, default_value_t = 0.02)]
    pub noise_sd: f64,
    /// Level-1 threshold q₀ (intensity units)
    #[arg(long, default_value_t = 0.07)]
    pub q0: f64,
    /// Per-level threshold factor f, q_l = q₀ f^{l−1}
    #[arg(long, default_value_t = 1.0)]
    pub scale_f: f64,
    /// Regularity functional J
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Huber)]
    pub objective: ObjectiveArg,
    /// Huber smoothing width α (intensity units)
    #[arg(long, default_value_t = 0.25)]
    pub huber_alpha: f64,
    /// Forward operator A
    #[arg(long, value_enum, default_value_t = ForwardArg::Psf)]
    pub forward: ForwardArg,
    /// PSF CSV (k rows of k values) instead of the Gaussian kernel
    #[arg(long)]
    pub psf: Option<PathBuf>,
    /// Side of the Gaussian PSF (pixels)
    #[arg(long, default_value_t = 7)]
    pub psf_size: usize,
    /// Standard deviation of the Gaussian PSF (pixels)
    #[arg(long, default_value_t = 1.0)]
    pub psf_sd: f64,
    /// Observed image (binary graymap or raw float) instead of synthetic data
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Primal step τ
    #[arg(long, default_value = "0.02")]
    pub tau: TauChoice,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    /// key=value file; flags given on the command line take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Condition number κ_𝒜 = λ_max/λ_min of 𝒜ᵀ𝒜 (≥ 1)
    #[arg(long, default_value_t = 1.0)]
    pub kappa_a: f64,
    /// Condition number κ_f = L_f/μ (≥ 1)
    #[arg(long, default_value_t = 1.0)]
    pub kappa_f: f64,
    /// Gradient Lipschitz constant L_f
    #[arg(long, default_value_t = 1.0)]
    pub lipschitz: f64,
    /// λ_max(𝒜ᵀ𝒜)
    #[arg(long, default_value_t = 1.0)]
    pub lambda_max: f64,
    /// Derive κ_𝒜, κ_f, L_f, λ_max from the TV denoising problem of this length
    #[arg(long)]
    pub tv_n: Option<usize>,
    /// Target accuracy ε of the iteration budget
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Initial distance C = ‖u⁰ − û‖_H
    #[arg(long, default_value_t = 1.0)]
    pub initial_distance: f64,
    /// Budget for the primal or dual sequence
    #[arg(long, value_enum, default_value_t = TargetArg::Primal)]
    pub target: TargetArg,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    /// key=value file; flags given on the command line take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Objective φ
    #[arg(long, value_enum, default_value_t = CertifyObjective::Quadratic)]
    pub objective: CertifyObjective,
    /// Point y (CSV, one coordinate per line)
    #[arg(long)]
    pub point: Option<PathBuf>,
    /// Data b of the quadratic objective (CSV) [default: the point itself]
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Huber width α
    #[arg(long, default_value_t = 0.25)]
    pub alpha: f64,
    /// Modified-Huber parameter ε in (0, α)
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Radius of the sampled ball around y
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Quadratic support constant μ
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    /// Number of random sample points
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Sampling seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Failure of a subcommand with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<papc_core::Error> for CliError {
    fn from(e: papc_core::Error) -> Self {
        use papc_core::Error as E;
        let code = match &e {
            E::Divergence { .. } | E::Metric { .. } => EXIT_DIVERGENCE,
            E::Io { .. } | E::Parse { .. } | E::Format(_) | E::EmptyInput(_) => EXIT_IO,
            E::InvalidDimension(_)
            | E::InvalidParameter(_)
            | E::ParameterDomain(_)
            | E::TuningFailure(_) => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit code. Reports go to `stdout`, diagnostics to stderr.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match parse(args) {
        Ok(c) => c,
        Err(Parse::Clap(e)) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
        Err(Parse::Cli(e)) => {
            eprintln!("papc: {e}");
            return e.code;
        }
    };
    match commands::dispatch(&cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("papc: {e}");
            e.code
        }
    }
}

enum Parse {
    Clap(clap::Error),
    Cli(CliError),
}

fn parse(args: Vec<OsString>) -> Result<Cli, Parse> {
    let matches = Cli::command()
        .try_get_matches_from(&args)
        .map_err(Parse::Clap)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let Some(path) = sub.get_one::<PathBuf>("config") else {
        return Cli::from_arg_matches(&matches).map_err(Parse::Clap);
    };
    let entries = config::read_config_file(path).map_err(Parse::Cli)?;
    let cmd = Cli::command();
    let sub_cmd = cmd
        .find_subcommand(name)
        .expect("matched subcommand exists");
    let extra = config::merge_args(sub_cmd, sub, &entries).map_err(Parse::Cli)?;
    let mut merged = args;
    merged.extend(extra);
    let matches = Cli::command()
        .try_get_matches_from(&merged)
        .map_err(Parse::Clap)?;
    Cli::from_arg_matches(&matches).map_err(Parse::Clap)
}

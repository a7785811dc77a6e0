mod checks;
mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "stkernel",
    version,
    about = "Space-time covariance kernels: evaluation, simulation, variograms, fitting, prediction and self-checks"
)]
pub struct Cli {
    /// Model JSON file.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate C, C/C(0,0), the marginals and Q_int on a lag grid.
    Eval(EvalArgs),
    /// Draw a Gaussian field on a regular grid.
    Simulate(SimulateArgs),
    /// Estimate spatial, temporal and joint empirical variograms.
    Variogram(VariogramArgs),
    /// Two-stage weighted-least-squares fit.
    Fit(FitArgs),
    /// Gaussian-process conditional means and variances.
    Predict(PredictArgs),
    /// Admissibility, oracle, ODE and positivity checks.
    Checks(ChecksArgs),
}

#[derive(Debug, Args)]
pub struct FigureArg {
    /// Named preset (fig1, fig2, fig3, lin1, lin2, ou1, ou2, s2, s2b).
    #[arg(long)]
    pub figure: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub figure: FigureArg,
    #[arg(long, default_value_t = 0.0)]
    pub r_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 61)]
    pub r_count: usize,
    #[arg(long, default_value_t = 0.0)]
    pub tau_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub tau_max: f64,
    #[arg(long, default_value_t = 61)]
    pub tau_count: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub figure: FigureArg,
    /// GridSpec JSON file; overrides the grid flags.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Spatial node counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "64,64")]
    pub spatial: Vec<usize>,
    #[arg(long, default_value_t = 128)]
    pub nt: usize,
    #[arg(long, default_value_t = 1.0)]
    pub ds: f64,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// Also write field.csv.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Field sidecar written by `simulate`; the binary is the sibling `.bin`.
    #[arg(long, conflicts_with = "data")]
    pub field: Option<PathBuf>,
    /// Scattered data CSV with header s1,...,sd,t,z.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VariogramArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 16)]
    pub r_bins: usize,
    #[arg(long, default_value_t = 32)]
    pub tau_bins: usize,
    /// Spatial bin step (default: the input's natural spacing).
    #[arg(long)]
    pub r_step: Option<f64>,
    /// Temporal bin step (default: the input's natural spacing).
    #[arg(long)]
    pub tau_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// ldho or ou.
    #[arg(long, default_value = "ldho")]
    pub family: String,
    /// quadratic or linear.
    #[arg(long, default_value = "quadratic")]
    pub dispersion: String,
    #[arg(long, default_value_t = 16)]
    pub r_bins: usize,
    #[arg(long, default_value_t = 32)]
    pub tau_bins: usize,
    /// FitOptions JSON file (regimes, optimizer, bounds).
    #[arg(long)]
    pub options: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub figure: FigureArg,
    /// Observations CSV with header s1,...,sd,t,z.
    #[arg(long)]
    pub data: PathBuf,
    /// Query CSV with header s1,...,sd,t.
    #[arg(long)]
    pub query: PathBuf,
    /// Known mean (default: the sample mean of the observations).
    #[arg(long)]
    pub mean: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ChecksArgs {
    /// Preset to check; with neither this nor --model every preset is checked.
    #[command(flatten)]
    pub figure: FigureArg,
    /// JSON file overriding check tolerances and sample sizes.
    #[arg(long)]
    pub tolerances: Option<PathBuf>,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(CliError::config)?;
    }
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::config(format!("output directory {}: {e}", cli.out.display())))?;
    match &cli.command {
        Command::Eval(a) => commands::eval(cli, a),
        Command::Simulate(a) => commands::simulate(cli, a),
        Command::Variogram(a) => commands::variogram(cli, a),
        Command::Fit(a) => commands::fit(cli, a),
        Command::Predict(a) => commands::predict(cli, a),
        Command::Checks(a) => commands::checks(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stkernel: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}

//! `cobasis` command-line interface.

pub mod commands;
pub mod error;
pub mod format;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cobasis", version, about = "Common orthonormal bases for weighted matrix sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CSVD (or mean-SVD) basis, coefficients and mixing diagnostic.
    Decompose(DecomposeArgs),
    /// Gradient descent over orthogonal matrices.
    Optimize(OptimizeArgs),
    /// Experiment harnesses.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizeArg {
    None,
    Rc,
    RcScaled,
}

impl From<NormalizeArg> for cobasis::Normalization {
    fn from(n: NormalizeArg) -> Self {
        match n {
            NormalizeArg::None => cobasis::Normalization::None,
            NormalizeArg::Rc => cobasis::Normalization::Rc,
            NormalizeArg::RcScaled => cobasis::Normalization::RcScaled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Csvd,
    MeanSvd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalArg {
    Abs,
    Pow4,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Identity,
    Csvd,
    Random,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Matrix-set JSON file.
    pub input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, value_enum, default_value = "none")]
    pub normalize: NormalizeArg,
    #[arg(long, value_enum, default_value = "csvd")]
    pub method: MethodArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    pub input: PathBuf,
    #[arg(long = "f", value_enum, default_value = "pow4")]
    pub eval: EvalArg,
    #[arg(long, value_enum, default_value = "csvd")]
    pub init: InitArg,
    /// Maximum number of descent iterations.
    #[arg(long, default_value_t = 5000)]
    pub steps: usize,
    /// Comma-separated step sizes (0 is always tried as well).
    #[arg(long, value_delimiter = ',', default_values_t = cobasis::orthopt::DEFAULT_STEPS.to_vec())]
    pub eps_grid: Vec<f64>,
    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,
    /// Optimize a single U = V.
    #[arg(long)]
    pub symmetric: bool,
    #[arg(long, env = "COBASIS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// CSVD powers used when `--init csvd`.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Applied to the matrices before both initialization and descent.
    #[arg(long, value_enum, default_value = "none")]
    pub normalize: NormalizeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Hidden-basis recovery on rotated sparse 0/1 matrices.
    Random(RandomArgs),
    /// Image-block KLT turned into a matrix set and compared with DCT-II.
    Dct(DctArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepNormalizeArg {
    None,
    Rc,
    RcScaled,
    /// `none` and `rc`.
    Both,
}

#[derive(Debug, Args)]
pub struct RandomArgs {
    /// Single ones-count; overrides `--o-range`.
    #[arg(long)]
    pub o: Option<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = cobasis::experiments::random::DEFAULT_O_RANGE.to_vec())]
    pub o_range: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = cobasis::experiments::random::DEFAULT_P_GRID.to_vec())]
    pub p_grid: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub normalize: SweepNormalizeArg,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long = "k", default_value_t = 10)]
    pub k: usize,
    #[arg(long, env = "COBASIS_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SyntheticArg {
    Ar1,
}

#[derive(Debug, Args)]
pub struct DctArgs {
    /// Directory of binary PGM images.
    #[arg(long, required_unless_present = "synthetic", conflicts_with = "synthetic")]
    pub images: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub synthetic: Option<SyntheticArg>,
    /// Number of synthetic images.
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    /// Side length of synthetic images.
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    #[arg(long, default_value_t = 0.95)]
    pub rho: f64,
    #[arg(long, default_value_t = 8)]
    pub block: usize,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, value_enum, default_value = "none")]
    pub normalize: NormalizeArg,
    #[arg(long, env = "COBASIS_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `argv` (program name first) and runs it.
pub fn run<I, S>(argv: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are not failures
            if !e.use_stderr() {
                e.print().map_err(|io| CliError::Io(io.to_string()))?;
                return Ok(());
            }
            return Err(CliError::Config(e.to_string().trim_end().to_string()));
        }
    };
    commands::dispatch(cli, &argv[1..])
}

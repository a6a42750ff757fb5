use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;

use report::Format;

/// Boundary bootstrap and FK transfer-matrix amplitude ratios for critical
/// loop models.
#[derive(Debug, Parser)]
#[command(name = "loopcft", version)]
struct Cli {
    /// Worker threads for per-q tasks (0 = all cores).
    #[arg(long, global = true, env = "LOOPCFT_WORKERS", default_value_t = 0)]
    workers: usize,

    /// Directory for cached lattice state spaces.
    #[arg(long, global = true, env = "LOOPCFT_CACHE_DIR")]
    cache_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Amplitude ratios λ/μ.
    Ratio {
        #[command(subcommand)]
        mode: RatioMode,
    },
    /// Tabulate the connectivity G(σ).
    Gfun {
        #[arg(long, env = "LOOPCFT_BC", default_value = "wired")]
        bc: BcArg,
        #[arg(long, env = "LOOPCFT_Q")]
        q: f64,
        /// Cross-ratios, comma separated.
        #[arg(long, env = "LOOPCFT_SIGMA", value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7,0.9")]
        sigma: Vec<f64>,
        #[command(flatten)]
        trunc: Truncation,
        #[command(flatten)]
        output: Output,
    },
    /// Compare recursive blocks with the Gram-matrix oracle.
    BlocksCheck {
        #[arg(long, env = "LOOPCFT_Q")]
        q: f64,
    },
    /// Compare the transfer matrix with exhaustive edge-subset enumeration.
    LatticeBruteforce {
        #[arg(long = "width", short = 'L', env = "LOOPCFT_WIDTH")]
        width: usize,
        #[arg(long, env = "LOOPCFT_ROWS")]
        rows: usize,
        #[arg(long, env = "LOOPCFT_Q")]
        q: f64,
        /// free, wired, or cylinder.
        #[arg(long, env = "LOOPCFT_BC", default_value = "free")]
        bc: String,
    },
    /// Print the defaults table.
    ShowConfig {
        #[command(flatten)]
        trunc: Truncation,
    },
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
enum RatioMode {
    /// Bootstrap and lattice side by side, with 1/L extrapolation.
    Compare(RatioArgs),
    Bootstrap(RatioArgs),
    Lattice(RatioArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BcArg {
    Free,
    Wired,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Args)]
struct Truncation {
    /// Bulk-channel fields kept (N_s).
    #[arg(long, env = "LOOPCFT_NS")]
    ns: Option<usize>,
    /// Boundary-channel fields kept (N_t).
    #[arg(long, env = "LOOPCFT_NT")]
    nt: Option<usize>,
    /// Conformal block order in q.
    #[arg(long, env = "LOOPCFT_ORDER")]
    order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Args)]
struct Output {
    /// Output file (stdout when absent).
    #[arg(long, env = "LOOPCFT_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "LOOPCFT_FORMAT", default_value = "csv")]
    format: Format,
}

#[derive(Debug, Clone, PartialEq, Args)]
struct RatioArgs {
    /// Single coupling (shorthand for a one-point grid).
    #[arg(long, env = "LOOPCFT_Q", conflicts_with = "q_grid")]
    q: Option<f64>,
    /// Couplings, comma separated.
    #[arg(long, env = "LOOPCFT_Q_GRID", value_delimiter = ',')]
    q_grid: Option<Vec<f64>>,
    #[arg(long, env = "LOOPCFT_BC", default_value = "wired")]
    bc: BcArg,
    /// Odd lattice widths.
    #[arg(long, env = "LOOPCFT_SIZES", value_delimiter = ',', default_value = "5,7,9,11")]
    sizes: Vec<usize>,
    #[command(flatten)]
    trunc: Truncation,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("LOOPCFT_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            report::diagnostic("error", &format!("{e:#}"));
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build_global()
        .context("configuring the worker pool")?;
    let cache = cli.cache_dir.as_deref();
    match cli.command {
        Command::Ratio { mode } => {
            let (args, bootstrap, lattice) = match mode {
                RatioMode::Compare(a) => (a, true, true),
                RatioMode::Bootstrap(a) => (a, true, false),
                RatioMode::Lattice(a) => (a, false, true),
            };
            let grid = match (args.q, &args.q_grid) {
                (Some(q), _) => vec![q],
                (None, Some(g)) => g.clone(),
                (None, None) => Vec::new(),
            };
            if let Some(bad) = args.sizes.iter().find(|&&l| l % 2 == 0 || l == 0) {
                bail!("lattice sizes must be odd, got {bad}");
            }
            let config = commands::bootstrap_config(&args.trunc)?;
            commands::ratio(&grid, args.bc, &args.sizes, bootstrap, lattice, &config, cache, &args.output)
        }
        Command::Gfun { bc, q, sigma, trunc, output } => {
            let config = commands::bootstrap_config(&trunc)?;
            commands::gfun(bc, q, &sigma, &config, &output)
        }
        Command::BlocksCheck { q } => commands::blocks_check(q),
        Command::LatticeBruteforce { width, rows, q, bc } => commands::lattice_bruteforce(width, rows, q, &bc),
        Command::ShowConfig { trunc } => {
            let config = commands::bootstrap_config(&trunc)?;
            commands::show_config(&config)
        }
    }
}

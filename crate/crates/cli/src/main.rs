mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Fair-cut centers, congestion cores and geodesic traffic experiments.
#[derive(Parser, Debug)]
#[command(name = "congest", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a fair-cut center and the fair-cut index.
    Faircut(FaircutArgs),
    /// Congestion core: fair-cut center, blocking radius and traffic density.
    Core(CoreArgs),
    /// Marching hyperplanes localization.
    March(MarchArgs),
    /// Traffic densities and Gromov δ on a weighted graph.
    Graph(GraphArgs),
    /// Fair-cut index of simplices against (m/(m+1))^m and 1/e.
    Conjecture(ConjectureArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Monte Carlo samples.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: ./out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Tangent-sphere minimizer: scan-golden, sweep or nelder-mead.
    #[arg(long)]
    pub direction_search: Option<String>,
}

#[derive(Args, Debug)]
pub struct FaircutArgs {
    #[command(flatten)]
    pub common: Common,
    /// Pattern-search evaluation budget.
    #[arg(long)]
    pub max_evals: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CoreArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub max_evals: Option<usize>,
    /// Pairs for the traffic density estimate.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Radius grid for the density profile, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct MarchArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub probes: Option<usize>,
    /// 1/(m+1), 1/e or a number in (0, 1).
    #[arg(long)]
    pub threshold: Option<String>,
}

#[derive(Args, Debug)]
pub struct GraphArgs {
    #[command(flatten)]
    pub common: Common,
    /// Edge list file: "u v [length]" per line.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// any-geodesic or unique-only.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Sampled 4-tuples for δ when the graph exceeds the exact-scan limit.
    #[arg(long)]
    pub delta_samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ConjectureArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dimensions to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub max_evals: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Faircut(a) => commands::faircut(a),
        Command::Core(a) => commands::core(a),
        Command::March(a) => commands::march(a),
        Command::Graph(a) => commands::graph(a),
        Command::Conjecture(a) => commands::conjecture(a),
    };
    match result {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            commands::error_exit_code(&e)
        }
    }
}

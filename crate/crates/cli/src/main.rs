//! `sprawl`: build, query, benchmark and verify comparison-based indexes.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad usage or parameters,
//! 3 unreadable or malformed input.

mod bench;
mod gen;
mod io;
mod optimize;
mod plot;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sprawl::hypergraph::Heuristic;

use io::{KindArg, SpaceArg};

#[derive(Debug)]
pub enum CliError {
    /// A verification or oracle check failed.
    Failed(String),
    Usage(String),
    Input(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Failed(m) | CliError::Usage(m) | CliError::Input(m) => f.write_str(m),
        }
    }
}

impl From<sprawl::Error> for CliError {
    fn from(e: sprawl::Error) -> Self {
        use sprawl::Error as E;
        let msg = e.to_string();
        match e {
            E::Parse { .. } | E::Io(_) | E::Json(_) | E::Structure(_) => CliError::Input(msg),
            E::Solver(_) | E::Emulation(_) => CliError::Failed(msg),
            E::Index(_) | E::Dimension { .. } | E::Param(_) | E::Capability(_) | E::Size { .. } => CliError::Usage(msg),
        }
    }
}

#[derive(Parser)]
#[command(name = "sprawl", version, about = "Exact comparison-based similarity search")]
struct Cli {
    /// Seed for every random choice made by the command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

/// How a dataset file is read and compared.
#[derive(Args, Clone, Debug)]
pub struct SpaceOpts {
    #[arg(long, value_enum, default_value_t = SpaceArg::Euclidean)]
    space: SpaceArg,
    /// Minkowski exponent for `--space euclidean` (default 2).
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum HeuristicArg {
    LowerBound,
    Fifo,
    Lifo,
}

impl HeuristicArg {
    fn heuristic(self) -> Heuristic {
        match self {
            HeuristicArg::LowerBound => Heuristic::LowerBound,
            HeuristicArg::Fifo => Heuristic::Fifo,
            HeuristicArg::Lifo => Heuristic::Lifo,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic vector dataset.
    Gen(gen::GenArgs),
    /// Build an index over a dataset and save it.
    Build(BuildArgs),
    /// Run one range or k-nearest-neighbour query against a saved index.
    Query(bench::QueryArgs),
    /// Run many queries and compare each against a linear scan.
    Bench(bench::BenchArgs),
    /// Run one of the built-in checkers.
    Verify(verify::VerifyArgs),
    /// Fit ambit facets for a set of foci and report their filtering bounds.
    Optimize(optimize::OptimizeArgs),
    /// Draw a 2-D region boundary as SVG.
    Plot(plot::PlotArgs),
    /// Show the sprawl built for a DNF formula and whether it is correct.
    DemoDnf(verify::DemoArgs),
}

#[derive(Args)]
struct BuildArgs {
    data: PathBuf,
    #[command(flatten)]
    space: SpaceOpts,
    #[arg(long, value_enum, default_value_t = KindArg::BallTree)]
    kind: KindArg,
    /// Pivot count for laesa and pm-tree.
    #[arg(long, default_value_t = 8)]
    pivots: usize,
    /// Children per node for pm-tree.
    #[arg(long, default_value_t = 2)]
    arity: usize,
    #[arg(short, long)]
    output: PathBuf,
}

fn build(a: BuildArgs) -> Result<(), CliError> {
    use std::sync::Arc;
    let space = Arc::new(io::load_space(&a.data, a.space.space, a.space.p)?);
    let ids: Vec<u32> = (0..space.len() as u32).collect();
    let kind = io::index_kind(a.kind, a.pivots, a.arity);
    let (s, res) = sprawl::sprawl::build_classic(space, &ids, kind)?;
    let file = sprawl::persist::IndexFile::from_sprawl(&s, Some(kind), Some(&res));
    file.save(&a.output)?;
    println!(
        "built {} over {} points: {} roots, {} edges -> {}",
        a.kind.to_possible_value().map_or("index".into(), |v| v.get_name().to_string()),
        s.nodes.len(),
        s.roots.len(),
        s.edges.len(),
        a.output.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let seed = cli.seed;
    match cli.command {
        Command::Gen(a) => gen::run(a, seed),
        Command::Build(a) => build(a),
        Command::Query(a) => bench::query(a),
        Command::Bench(a) => bench::bench(a, seed),
        Command::Verify(a) => verify::run(a, seed),
        Command::Optimize(a) => optimize::run(a, seed),
        Command::Plot(a) => plot::run(a),
        Command::DemoDnf(a) => verify::demo(a),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

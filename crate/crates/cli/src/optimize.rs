//! Facet fitting for a chosen set of foci over a dataset.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sprawl::comparison::{Focus, Point, PointId};
use sprawl::optimize::{alpha_search, cluster_facets, features, query_features, runoff_foci, two_approx_foci, FacetMode};
use sprawl::sprawl::farthest_first;

use crate::{io, CliError, SpaceOpts};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    TwoApprox,
    Runoff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Best expected filtering bound against each query cluster.
    Lp25,
    /// Smallest radius covering the data.
    Minrad,
}

#[derive(Args)]
pub struct OptimizeArgs {
    data: PathBuf,
    #[command(flatten)]
    space: SpaceOpts,
    /// Focus point ids, comma separated.
    #[arg(long, conflicts_with = "choose", required_unless_present = "choose")]
    foci: Option<String>,
    /// Number of foci to pick automatically.
    #[arg(long)]
    choose: Option<usize>,
    #[arg(long, value_enum, default_value_t = Method::TwoApprox)]
    method: Method,
    /// Training query centers, one per line.
    #[arg(long, conflicts_with = "random_queries")]
    queries: Option<PathBuf>,
    /// Number of random training query centers (default 100).
    #[arg(long)]
    random_queries: Option<usize>,
    /// Facets to fit, one per query cluster.
    #[arg(long, default_value_t = 1)]
    facets: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Lp25)]
    mode: ModeArg,
    /// Also search for the best power-remoteness exponent.
    #[arg(long)]
    alpha_search: bool,
}

fn list(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", cells.join(", "))
}

pub fn run(a: OptimizeArgs, seed: u64) -> Result<(), CliError> {
    let space = io::load_space(&a.data, a.space.space, a.space.p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let queries: Vec<Point> = match &a.queries {
        Some(p) => io::load_points(&space, p)?,
        None => io::random_points(&space, a.random_queries.unwrap_or(100), &mut rng)?,
    };
    let all: Vec<PointId> = (0..space.len() as PointId).collect();
    let foci: Vec<PointId> = match (&a.foci, a.choose) {
        (Some(f), _) => {
            let ids = io::parse_ids(f)?;
            if let Some(&bad) = ids.iter().find(|&&i| i as usize >= space.len()) {
                return Err(CliError::Usage(format!("focus {bad} outside 0..{}", space.len())));
            }
            ids
        }
        (None, Some(m)) => match a.method {
            Method::TwoApprox => {
                let c = two_approx_foci(&space, &all, m)?;
                println!("two-approximation radius: {:.6} with weights {}", c.r, list(&c.a));
                c.foci
            }
            Method::Runoff => {
                let cand = farthest_first(&space, &all, (2 * m).min(all.len()));
                let resp: Vec<PointId> = all.iter().copied().filter(|u| !cand.contains(u)).collect();
                let r = runoff_foci(&space, &cand, &resp, &queries, m)?;
                println!("runoff candidates: {cand:?}");
                println!("first round bound: {:.6}", r.first.ell);
                r.foci
            }
        },
        (None, None) => unreachable!("clap requires one of --foci and --choose"),
    };
    println!("foci: {foci:?}");
    let resp: Vec<PointId> = all.iter().copied().filter(|u| !foci.contains(u)).collect();
    if resp.is_empty() {
        return Err(CliError::Usage("every point is a focus; nothing to fit".into()));
    }
    let x = features(&space, &foci, &resp);
    let qf = query_features(&space, &foci, &queries)?;
    let mode = match a.mode {
        ModeArg::Lp25 => FacetMode::Lp25,
        ModeArg::Minrad => FacetMode::MinRadius,
    };
    let set = cluster_facets(&x, &qf, a.facets, mode, seed)?;
    for (i, s) in set.solutions.iter().enumerate() {
        let flag = if s.degenerate { " (degenerate)" } else { "" };
        println!("facet {i}: a={} r={:.6} bound={:.6}{flag}", list(&s.a), s.r, s.ell);
    }
    let ambit = set.into_ambit(foci.iter().map(|&f| Focus::Node(f)).collect())?;
    let covered = x.iter().filter(|c| ambit.contains_features_tol(c)).count();
    let bounds: Vec<f64> = qf.iter().map(|z| ambit.ball_lower_bound(z)).collect();
    let mean = bounds.iter().sum::<f64>() / bounds.len().max(1) as f64;
    let pruning = bounds.iter().filter(|&&b| b > 0.0).count();
    println!("data inside the ambit: {covered}/{}", x.len());
    println!("mean distance lower bound over training queries: {mean:.6}");
    println!("training queries with a positive bound: {pruning}/{}", qf.len());
    if covered != x.len() {
        return Err(CliError::Failed("fitted ambit leaves data points outside".into()));
    }
    if a.alpha_search {
        let r = alpha_search(&x, &qf)?;
        println!("best power exponent: {:.4} bound {:.6}", r.alpha, r.bound);
    }
    Ok(())
}

//! Single queries and oracle-checked benchmarks over saved indexes.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sprawl::comparison::{Point, PointId, Query};
use sprawl::persist::IndexFile;
use sprawl::sprawl::{SearchOptions, Searcher, Sprawl};

use crate::{io, CliError, HeuristicArg};

pub fn load_index(path: &Path) -> Result<Sprawl, CliError> {
    let file = IndexFile::load(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    file.to_sprawl().map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[derive(Args)]
pub struct QueryArgs {
    index: PathBuf,
    /// Query center: coordinates, a string, or a matrix element index.
    #[arg(long, allow_hyphen_values = true)]
    center: String,
    #[arg(long, conflicts_with = "knn", required_unless_present = "knn")]
    radius: Option<f64>,
    #[arg(long)]
    knn: Option<usize>,
    /// Evaluate lazy edges like ordinary ones.
    #[arg(long)]
    eager: bool,
    #[arg(long, value_enum, default_value_t = HeuristicArg::LowerBound)]
    heuristic: HeuristicArg,
}

pub fn query(a: QueryArgs) -> Result<(), CliError> {
    let s = load_index(&a.index)?;
    let center = io::parse_point(&s.space, &a.center)?;
    let q = match (a.radius, a.knn) {
        (Some(r), _) => Query::ball(center.clone(), r),
        (None, Some(k)) => Query::knn(center.clone(), k),
        (None, None) => unreachable!("clap requires one of --radius and --knn"),
    };
    let opts = SearchOptions { heuristic: a.heuristic.heuristic(), eager: a.eager };
    let out = s.search(&q, &opts)?;
    for (i, &v) in out.results.iter().enumerate() {
        let d = match out.distances.get(i) {
            Some(&d) => d,
            None => s.space.delta_to(v, &center)?,
        };
        println!("{v}\t{}", io::num(d));
    }
    println!(
        "# results={} traversed={} distance_computations={} region_evaluations={}",
        out.results.len(),
        out.traversal.len(),
        out.distance_computations,
        out.region_evaluations
    );
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Range,
    Knn,
}

#[derive(Args)]
pub struct BenchArgs {
    index: PathBuf,
    /// Query centers, one per line, in the dataset's format.
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    queries: Option<PathBuf>,
    /// Number of random query centers.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Range)]
    mode: Mode,
    /// Fixed range radius.
    #[arg(long, conflicts_with = "selectivity")]
    radius: Option<f64>,
    /// Per-query radius covering this fraction of the data (default 0.01).
    #[arg(long)]
    selectivity: Option<f64>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    eager: bool,
    #[arg(long, value_enum, default_value_t = HeuristicArg::LowerBound)]
    heuristic: HeuristicArg,
    /// Print one line per query.
    #[arg(long)]
    per_query: bool,
}

struct Summary {
    mean: f64,
    median: f64,
    p95: u64,
}

fn summarize(values: &[u64]) -> Summary {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n == 0 {
        return Summary { mean: 0.0, median: 0.0, p95: 0 };
    }
    let mean = v.iter().sum::<u64>() as f64 / n as f64;
    let median = if n % 2 == 1 { v[n / 2] as f64 } else { (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0 };
    let p95 = v[(n * 95).div_ceil(100) - 1];
    Summary { mean, median, p95 }
}

/// The exact answer by scanning every node.
fn oracle(s: &Sprawl, center: &Point, q: &Query) -> Result<Vec<PointId>, CliError> {
    let mut d: Vec<(f64, PointId)> =
        s.nodes.iter().map(|&v| Ok((s.space.delta_to(v, center)?, v))).collect::<Result<_, sprawl::Error>>()?;
    match q {
        Query::Ball { knn: Some(k), .. } => {
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            Ok(d.into_iter().take(*k).map(|(_, v)| v).collect())
        }
        Query::Ball { radius, .. } => {
            let mut r: Vec<PointId> = d.into_iter().filter(|&(x, _)| x <= *radius).map(|(_, v)| v).collect();
            r.sort_unstable();
            Ok(r)
        }
        _ => unreachable!("bench issues ball queries only"),
    }
}

fn selectivity_radius(s: &Sprawl, center: &Point, f: f64) -> Result<f64, CliError> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(CliError::Usage(format!("selectivity {f} outside (0, 1]")));
    }
    let mut d: Vec<f64> = s.nodes.iter().map(|&v| s.space.delta_to(v, center)).collect::<Result<_, _>>()?;
    d.sort_by(f64::total_cmp);
    let k = ((f * d.len() as f64).ceil() as usize).clamp(1, d.len());
    Ok(d[k - 1])
}

pub fn bench(a: BenchArgs, seed: u64) -> Result<(), CliError> {
    let s = load_index(&a.index)?;
    let centers = match (&a.queries, a.random) {
        (Some(p), _) => io::load_points(&s.space, p)?,
        (None, Some(n)) => io::random_points(&s.space, n, &mut ChaCha8Rng::seed_from_u64(seed))?,
        (None, None) => unreachable!("clap requires one of --queries and --random"),
    };
    if a.mode == Mode::Knn && a.k == 0 {
        return Err(CliError::Usage("--k must be positive".into()));
    }
    let opts = SearchOptions { heuristic: a.heuristic.heuristic(), eager: a.eager };
    let mut searcher = Searcher::new(&s);
    let (mut sizes, mut traversed, mut dcs, mut evals) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, c) in centers.iter().enumerate() {
        let q = match a.mode {
            Mode::Knn => Query::knn(c.clone(), a.k),
            Mode::Range => match a.radius {
                Some(r) => Query::ball(c.clone(), r),
                None => Query::ball(c.clone(), selectivity_radius(&s, c, a.selectivity.unwrap_or(0.01))?),
            },
        };
        let out = searcher.search(&q, &opts)?;
        let want = oracle(&s, c, &q)?;
        if out.results != want {
            let missing: Vec<_> = want.iter().filter(|v| !out.results.contains(v)).collect();
            let extra: Vec<_> = out.results.iter().filter(|v| !want.contains(v)).collect();
            println!("query {i}: MISMATCH missing={missing:?} extra={extra:?}");
            return Err(CliError::Failed(format!("query {i} disagrees with the linear scan")));
        }
        if a.per_query {
            println!(
                "query {i}: size={} traversed={} distance_computations={} region_evaluations={}",
                out.results.len(),
                out.traversal.len(),
                out.distance_computations,
                out.region_evaluations
            );
        }
        sizes.push(out.results.len() as u64);
        traversed.push(out.traversal.len() as u64);
        dcs.push(out.distance_computations);
        evals.push(out.region_evaluations);
    }
    let mode = match a.mode {
        Mode::Range => "range",
        Mode::Knn => "knn",
    };
    println!("queries: {} ({mode}) over {} points", centers.len(), s.nodes.len());
    println!("{:<22} {:>10} {:>10} {:>8}", "", "mean", "median", "p95");
    for (name, v) in [
        ("result size", &sizes),
        ("traversed", &traversed),
        ("distance computations", &dcs),
        ("region evaluations", &evals),
    ] {
        let t = summarize(v);
        println!("{name:<22} {:>10.2} {:>10.1} {:>8}", t.mean, t.median, t.p95);
    }
    println!("oracle agreement: {}/{}", centers.len(), centers.len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        let t = summarize(&[5, 1, 3, 2, 4]);
        assert_eq!((t.mean, t.median, t.p95), (3.0, 3.0, 5));
        let t = summarize(&(1..=100).collect::<Vec<_>>());
        assert_eq!((t.median, t.p95), (50.5, 95));
    }
}

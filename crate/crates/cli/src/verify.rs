//! Entry points to the library's checkers. Each prints a report and fails
//! with exit code 1 on the first violated check.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{ArgGroup, Args};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sprawl::ambit::Ambit;
use sprawl::comparison::{feature_map, minkowski, ComparisonSpace, Focus, Point, PointRef, Query, Workload};
use sprawl::hypergraph::{check_traversal_axioms, enumerate_repertoire, random_graph};
use sprawl::persist::IndexFile;
use sprawl::sprawl::{build_classic, build_dnf_gadget, check_correct_small, check_responsibility, Dnf, IndexKind, Region, SearchOptions};

use crate::CliError;

#[derive(Args)]
#[command(group(ArgGroup::new("check").required(true).args(["axioms", "dnf", "responsibility", "properties"])))]
pub struct VerifyArgs {
    /// Traversal axioms on random signed hyperdigraphs.
    #[arg(long)]
    axioms: bool,
    /// Compare a formula's tautology verdict with its gadget's correctness.
    #[arg(long, value_name = "FORMULA")]
    dnf: Option<String>,
    /// Check a saved index's responsibility assignment.
    #[arg(long, value_name = "INDEX")]
    responsibility: Option<PathBuf>,
    /// Sampled metric, overlap and search checks.
    #[arg(long)]
    properties: bool,
    /// Instances to sample for --axioms and --properties.
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Largest graph for --axioms.
    #[arg(long, default_value_t = 6)]
    nodes: usize,
}

pub fn run(a: VerifyArgs, seed: u64) -> Result<(), CliError> {
    if let Some(f) = &a.dnf {
        return dnf(f);
    }
    if let Some(p) = &a.responsibility {
        return responsibility(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if a.axioms {
        return axioms(&mut rng, a.count, a.nodes);
    }
    properties(&mut rng, a.count)
}

fn axioms(rng: &mut ChaCha8Rng, count: usize, max_nodes: usize) -> Result<(), CliError> {
    if max_nodes == 0 || max_nodes > 8 {
        return Err(CliError::Usage(format!("--nodes {max_nodes} outside 1..=8")));
    }
    for i in 0..count {
        let n = rng.random_range(1..=max_nodes);
        let e = rng.random_range(0..=2 * n);
        let g = random_graph(rng, n, e);
        let rep = enumerate_repertoire(&g)?;
        let report = check_traversal_axioms(&rep.traversals, n);
        if let Some((axiom, witness)) = report.violation {
            print!("{}", g.to_text());
            println!("graph {i}: {axiom:?} violated by {witness:?}");
            return Err(CliError::Failed(format!("traversal axiom {axiom:?} violated")));
        }
    }
    println!("axioms: {count}/{count} random graphs pass");
    Ok(())
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// The tautology verdict, the gadget verdict, and the gadget's certificate
/// when it has one.
fn dnf_verdicts(text: &str) -> Result<(Dnf, bool, sprawl::sprawl::CorrectnessReport), CliError> {
    let f = Dnf::parse(text)?;
    let (s, w) = build_dnf_gadget(&f)?;
    let report = check_correct_small(&s, &w)?;
    Ok((f.clone(), f.is_tautology(), report))
}

fn dnf(text: &str) -> Result<(), CliError> {
    let (f, taut, report) = dnf_verdicts(text)?;
    println!("formula: {f}");
    println!("tautology: {}", yes(taut));
    println!("sprawl correct: {}", yes(report.correct()));
    if taut != report.correct() {
        println!("verdicts disagree");
        return Err(CliError::Failed("gadget verdict differs from the truth table".into()));
    }
    println!("verdicts agree");
    Ok(())
}

#[derive(Args)]
pub struct DemoArgs {
    formula: String,
}

pub fn demo(a: DemoArgs) -> Result<(), CliError> {
    let f = Dnf::parse(&a.formula)?;
    let (s, _) = build_dnf_gadget(&f)?;
    println!("formula: {f}");
    let name = |v: u32| -> String {
        let i = v as usize / 2;
        match (i < f.variables.len(), v % 2) {
            (true, 0) => f.variables[i].clone(),
            (true, _) => format!("!{}", f.variables[i]),
            _ => "phi".into(),
        }
    };
    println!("nodes:");
    for &v in &s.nodes {
        println!("  {v} {}", name(v));
    }
    let roots: Vec<String> = s.roots.iter().map(|&r| name(r)).collect();
    println!("roots: {}", roots.join(" "));
    println!("edges:");
    for e in &s.edges {
        let src: Vec<String> = e.sources.iter().map(|&v| name(v)).collect();
        let kind = if e.is_negative() { "eliminates" } else { "discovers" };
        println!("  {{{}}} {kind} {}", src.join(", "), name(e.target));
    }
    let (_, taut, report) = dnf_verdicts(&a.formula)?;
    println!("tautology: {}", yes(taut));
    println!("sprawl correct: {}", yes(report.correct()));
    if let Some(c) = report.certificate {
        let t: Vec<String> = c.traversal.iter().map(|&v| name(v)).collect();
        println!("maximal traversal missing {}: {}", name(c.missing), t.join(" "));
    }
    Ok(())
}

fn responsibility(path: &std::path::Path) -> Result<(), CliError> {
    let file = IndexFile::load(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let Some(res) = &file.responsibility else {
        return Err(CliError::Usage(format!("{} carries no responsibility assignment", path.display())));
    };
    let s = file.to_sprawl()?;
    let w = Workload::default().with_singletons(&s.nodes);
    let report = check_responsibility(&s, res, &w)?;
    println!("nodes: {} edges: {}", s.nodes.len(), s.edges.len());
    if report.passed() {
        println!("responsibility: pass");
        return Ok(());
    }
    for v in report.violations.iter().take(20) {
        match v.edge {
            Some(e) => println!("{:?} violated at edge {e} for node {}", v.law, v.node),
            None => println!("{:?} violated for node {}", v.law, v.node),
        }
    }
    println!("responsibility: FAIL ({} violations)", report.violations.len());
    Err(CliError::Failed("responsibility laws violated".into()))
}

fn check(name: &str, ok: usize, total: usize) -> Result<(), CliError> {
    println!("{name}: {ok}/{total}");
    if ok == total {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{name} failed on {} cases", total - ok)))
    }
}

fn random_vectors(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

fn properties(rng: &mut ChaCha8Rng, count: usize) -> Result<(), CliError> {
    // Triangle inequality over sampled triples.
    let mut ok = 0;
    for _ in 0..count {
        let p = [1.0, 2.0, 3.0, f64::INFINITY][rng.random_range(0..4)];
        let d = rng.random_range(1..6);
        let v = random_vectors(rng, 3, d);
        let (a, b, c) = (&v[0], &v[1], &v[2]);
        let holds = minkowski(a, c, p) <= minkowski(a, b, p) + minkowski(b, c, p) + 1e-9;
        let words: Vec<String> =
            (0..3).map(|_| (0..rng.random_range(0..6)).map(|_| ['a', 'b', 'c'][rng.random_range(0..3)]).collect()).collect();
        let lev = ComparisonSpace::levenshtein(&words);
        if holds && lev.delta(0, 2) <= lev.delta(0, 1) + lev.delta(1, 2) {
            ok += 1;
        }
    }
    check("triangle inequality", ok, count)?;

    // A region and a ball that share a planted point must be reported as overlapping.
    let mut ok = 0;
    for _ in 0..count {
        let m = rng.random_range(1..4);
        let pts = random_vectors(rng, m + 1, 2);
        let space = ComparisonSpace::euclidean(&pts)?;
        let foci: Vec<Focus> = (0..m as u32).map(Focus::Node).collect();
        let u = Point::Vector(random_vectors(rng, 1, 2).remove(0));
        let x = feature_map(&space, &foci, PointRef::External(&u))?.forward;
        let rows: Vec<Vec<f64>> = (0..rng.random_range(1..3))
            .map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let radii: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + rng.random::<f64>() * 0.1)
            .collect();
        let ambit = Ambit::linear(foci.clone(), rows, radii)?;
        let q = m as u32;
        let s = space.delta_ref(PointRef::External(&u), PointRef::Node(q))? + rng.random::<f64>() * 0.1;
        let z: Vec<f64> = (0..m as u32).map(|i| space.delta(i, q)).collect();
        if ambit.overlaps_ball(&z, s, true)? {
            ok += 1;
        }
    }
    check("overlap with planted common point", ok, count)?;

    // Index search agrees with a linear scan.
    let mut ok = 0;
    let kinds = [IndexKind::BallTree, IndexKind::Aesa, IndexKind::Laesa { pivots: 3 }, IndexKind::PmTree { arity: 2, pivots: 3 }];
    for i in 0..count {
        let n = rng.random_range(1..40);
        let space = Arc::new(ComparisonSpace::euclidean(&random_vectors(rng, n, 3))?);
        let ids: Vec<u32> = (0..n as u32).collect();
        let (s, _) = build_classic(space, &ids, kinds[i % kinds.len()])?;
        let center = Point::Vector(random_vectors(rng, 1, 3).remove(0));
        let q = Query::ball(center, rng.random::<f64>() * 0.6);
        let out = s.search(&q, &SearchOptions::default())?;
        if out.results == s.scan(&q)? {
            ok += 1;
        }
    }
    check("search equals linear scan", ok, count)?;

    // Responsibility of classic builds.
    let mut ok = 0;
    for i in 0..count {
        let n = rng.random_range(1..12);
        let space = Arc::new(ComparisonSpace::euclidean(&random_vectors(rng, n, 2))?);
        let ids: Vec<u32> = (0..n as u32).collect();
        let (s, res) = build_classic(space, &ids, kinds[i % kinds.len()])?;
        let w = Workload::default().with_singletons(&s.nodes);
        if check_responsibility(&s, &res, &w)?.passed() {
            ok += 1;
        }
    }
    check("responsibility of built indexes", ok, count)?;

    // Every region of a built index contains its own points.
    let space = Arc::new(ComparisonSpace::euclidean(&random_vectors(rng, 64, 2))?);
    let ids: Vec<u32> = (0..64).collect();
    let (s, res) = build_classic(space, &ids, IndexKind::BallTree)?;
    let mut total = 0;
    let mut ok = 0;
    for (e, resp) in s.edges.iter().zip(&res.edges) {
        for r in e.positive.iter().filter(|r| !matches!(r, Region::Universe)) {
            for &u in resp {
                total += 1;
                ok += usize::from(r.contains(&s.space, u)?);
            }
        }
    }
    check("positive regions cover their responsibilities", ok, total)?;
    println!("properties: pass");
    Ok(())
}

//! Worked examples for each module, checked end to end through the public API.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sprawl::ambit::{overlap_corner, overlap_monotone, RemotenessMap};
use sprawl::comparison::{
    build_hardness_gadget, feature_map, triangle_violation, ComparisonSpace, Focus, Point, PointId, PointRef, Query,
    Workload,
};
use sprawl::hypergraph::check_traversal_axioms;
use sprawl::optimize::{
    alpha_objective, alpha_search, cluster_facets, features, hull_ambit, min_radius, optimal_facet, radius_for,
    runoff_foci, solve_lp, two_approx_foci, FacetMode, LpOutcome, LpProblem, Sense, TrainingSet,
};
use sprawl::persist::IndexFile;
use sprawl::sprawl::{
    build_classic, build_dnf_gadget, check_correct_small, check_responsibility, Dnf, Edge, IndexKind, Law, Region,
    SearchOptions, Sprawl,
};

fn cloud(seed: u64, n: usize, dim: usize) -> Arc<ComparisonSpace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
    Arc::new(ComparisonSpace::euclidean(&rows).unwrap())
}

fn ids(n: usize) -> Vec<PointId> {
    (0..n as PointId).collect()
}

fn scan(space: &ComparisonSpace, c: &[f64], r: f64) -> Vec<PointId> {
    let q = Point::Vector(c.to_vec());
    ids(space.len()).into_iter().filter(|&v| space.delta_from(&q, v).unwrap() <= r).collect()
}

#[test]
fn feature_map_examples() {
    let s = ComparisonSpace::euclidean(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
    let f = feature_map(&s, &[Focus::Node(0), Focus::Node(1)], PointRef::Node(1)).unwrap();
    assert_eq!(f.forward, vec![1.0, 0.0]);
    assert_eq!(f.backward, None);
    let f = feature_map(&s, &[Focus::Node(0)], PointRef::Node(0)).unwrap();
    assert_eq!(f.forward, vec![0.0]);

    let p = ComparisonSpace::projection(&[vec![0.3, 0.7]]).unwrap();
    let f = feature_map(&p, &[Focus::Axis(0), Focus::Axis(1)], PointRef::Node(0)).unwrap();
    assert_eq!(f.forward, vec![0.3, 0.7]);
    assert_eq!(f, feature_map(&p, &[Focus::Axis(0), Focus::Axis(1)], PointRef::Node(0)).unwrap());
}

#[test]
fn hardness_gadget_examples() {
    let k3 = build_hardness_gadget(3, &[(0, 1), (1, 2), (0, 2)], 0.5).unwrap();
    for u in 0..4 {
        for v in 0..4 {
            if u != v {
                assert!([2.0, 3.5].contains(&k3.delta(u, v)));
            }
        }
    }
    let one = build_hardness_gadget(2, &[(0, 1)], 1.0).unwrap();
    assert_eq!(one.delta(0, 1), 2.0);
    assert_eq!(one.delta(0, 2), 4.0);
    assert_eq!(one.delta(1, 2), 4.0);
    assert_eq!(build_hardness_gadget(2, &[], 0.5).unwrap().delta(0, 1), 3.0);
}

#[test]
fn hardness_gadget_is_metric_for_every_small_graph() {
    // All graphs on 5 nodes, plus a sample on 8.
    let pairs: Vec<(usize, usize)> = (0..5).flat_map(|u| (u + 1..5).map(move |v| (u, v))).collect();
    for mask in 0u32..1 << pairs.len() {
        let e: Vec<_> = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
        let s = build_hardness_gadget(5, &e, 1.0).unwrap();
        assert_eq!(triangle_violation(&s), None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let e: Vec<_> = (0..8)
            .flat_map(|u| (u + 1..8).map(move |v| (u, v)))
            .filter(|_| rng.random_bool(0.4))
            .collect();
        assert_eq!(triangle_violation(&build_hardness_gadget(8, &e, 0.3).unwrap()), None);
    }
}

#[test]
fn axiom_examples() {
    let ok = [vec![], vec![0], vec![0, 1]].into_iter().collect();
    assert!(check_traversal_axioms(&ok, 2).passed());
    let missing_empty = [vec![0]].into_iter().collect();
    assert!(!check_traversal_axioms(&missing_empty, 1).passed());
}

#[test]
fn brute_force_sprawl_scans_everything() {
    let space = cloud(5, 50, 3);
    let mut s = Sprawl::new(space.clone(), ids(50));
    s.roots = ids(50);
    let c = vec![0.5, 0.5, 0.5];
    let out = s.search(&Query::ball(Point::Vector(c.clone()), 0.4), &SearchOptions::default()).unwrap();
    assert_eq!(out.results, scan(&space, &c, 0.4));
    assert_eq!(out.distance_computations, 50);
}

#[test]
fn ball_tree_on_2000_points_saves_work() {
    let space = cloud(1, 2000, 8);
    let (s, _) = build_classic(space.clone(), &ids(2000), IndexKind::BallTree).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let c: Vec<f64> = (0..8).map(|_| rng.random()).collect();
        let out = s.search(&Query::ball(Point::Vector(c.clone()), 0.45), &SearchOptions::default()).unwrap();
        assert_eq!(out.results, scan(&space, &c, 0.45));
        assert!(out.distance_computations < 2000);
    }
}

#[test]
fn knn_matches_scan() {
    let space = cloud(6, 400, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for kind in [IndexKind::BallTree, IndexKind::Aesa, IndexKind::Laesa { pivots: 6 }, IndexKind::PmTree { arity: 3, pivots: 4 }] {
        let (s, _) = build_classic(space.clone(), &ids(400), kind).unwrap();
        for k in [1, 10] {
            let c: Vec<f64> = (0..4).map(|_| rng.random()).collect();
            let q = Point::Vector(c.clone());
            let mut want: Vec<(f64, PointId)> = ids(400).into_iter().map(|v| (space.delta_from(&q, v).unwrap(), v)).collect();
            want.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let out = s.search(&Query::knn(q, k), &SearchOptions::default()).unwrap();
            assert_eq!(out.results, want[..k].iter().map(|w| w.1).collect::<Vec<_>>(), "{kind:?} k={k}");
        }
    }
}

#[test]
fn zero_radius_finds_the_point_and_its_duplicates() {
    let rows = vec![vec![0.0, 1.0], vec![2.0, 2.0], vec![0.0, 1.0], vec![5.0, 5.0]];
    let space = Arc::new(ComparisonSpace::euclidean(&rows).unwrap());
    let (s, _) = build_classic(space, &ids(4), IndexKind::BallTree).unwrap();
    let out = s.search(&Query::ball(Point::Vector(vec![0.0, 1.0]), 0.0), &SearchOptions::default()).unwrap();
    assert_eq!(out.results, vec![0, 2]);
}

#[test]
fn lazy_edges_do_not_change_results() {
    let space = cloud(12, 300, 3);
    let (s, _) = build_classic(space.clone(), &ids(300), IndexKind::PmTree { arity: 2, pivots: 6 }).unwrap();
    assert!(s.edges.iter().any(|e| e.lazy));
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let c: Vec<f64> = (0..3).map(|_| rng.random()).collect();
        let q = Query::ball(Point::Vector(c.clone()), rng.random_range(0.05..0.3));
        let lazy = s.search(&q, &SearchOptions::default()).unwrap();
        let eager = s.search(&q, &SearchOptions { eager: true, ..Default::default() }).unwrap();
        assert_eq!(lazy.results, eager.results);
        assert!(lazy.region_evaluations <= eager.region_evaluations);
    }
}

#[test]
fn eliminated_root_is_a_correctness_failure() {
    let space = Arc::new(ComparisonSpace::euclidean(&[vec![0.0], vec![1.0]]).unwrap());
    let mut s = Sprawl::new(space, vec![0, 1]);
    s.roots = vec![0, 1];
    s.edges.push(Edge::negative(&[], 1, Region::Empty));
    let w = Workload { queries: vec![Query::Set(vec![1])], atomistic: false };
    let report = check_correct_small(&s, &w).unwrap();
    let cert = report.certificate.expect("must be incorrect");
    assert_eq!(cert.missing, 1);
    assert_eq!(cert.query, 0);
    assert!(!cert.traversal.contains(&1));
}

#[test]
fn responsible_ball_tree_is_correct() {
    let space = cloud(8, 6, 2);
    let (s, res) = build_classic(space, &ids(6), IndexKind::BallTree).unwrap();
    let w = Workload { queries: vec![], atomistic: true }.with_singletons(&s.nodes);
    assert!(check_responsibility(&s, &res, &w).unwrap().passed());
    assert!(check_correct_small(&s, &w).unwrap().correct());
}

#[test]
fn dnf_examples() {
    for (text, taut) in [("x | !x", true), ("x & y", false), ("(x&y)|(!x)|(!y&x)", true)] {
        let f = Dnf::parse(text).unwrap();
        assert_eq!(f.is_tautology(), taut);
        let (s, w) = build_dnf_gadget(&f).unwrap();
        assert_eq!(check_correct_small(&s, &w).unwrap().correct(), taut, "{text}");
    }
}

#[test]
fn shrinking_a_ball_breaks_responsibility_and_growing_keeps_it() {
    let space = cloud(10, 40, 2);
    let (mut s, res) = build_classic(space.clone(), &ids(40), IndexKind::BallTree).unwrap();
    let w = Workload { queries: vec![Query::ball(Point::Vector(vec![0.5, 0.5]), 0.2)], atomistic: false }.with_singletons(&s.nodes);
    assert!(check_responsibility(&s, &res, &w).unwrap().passed());

    let mut grown = s.clone();
    for e in &mut grown.edges {
        for r in e.positive.iter_mut() {
            if let Region::Ball { radius, .. } = r {
                *radius += 1.0;
            }
        }
    }
    assert!(check_responsibility(&grown, &res, &w).unwrap().passed());

    let (i, far) = s
        .edges
        .iter()
        .enumerate()
        .find_map(|(i, e)| {
            let Some(Region::Ball { focus, .. }) = e.positive.first() else { return None };
            let far = res.edges[i].iter().copied().max_by(|&a, &b| space.delta(*focus, a).total_cmp(&space.delta(*focus, b)))?;
            (space.delta(*focus, far) > 0.0).then_some((i, far))
        })
        .unwrap();
    let Region::Ball { focus, radius } = &mut s.edges[i].positive[0] else { unreachable!() };
    *radius = 0.5 * space.delta(*focus, far);
    let report = check_responsibility(&s, &res, &w).unwrap();
    assert!(report.violations.iter().any(|v| v.law == Law::Discovery && v.edge == Some(i) && v.node == far));
}

#[test]
fn sorted_interval_tree_on_seven_keys() {
    let space = Arc::new(ComparisonSpace::projection(&(1..=7).map(|k| vec![k as f64]).collect::<Vec<_>>()).unwrap());
    let (s, res) = build_classic(space.clone(), &ids(7), IndexKind::SortedIntervalTree).unwrap();
    // Root keys plus children, every child edge delimited by at most two sources.
    assert!(!s.roots.is_empty() && s.roots.len() <= 2);
    for e in &s.edges {
        assert!(!e.sources.is_empty() && e.sources.len() <= 2);
        let Region::Ambit(a) = &e.positive[0] else { panic!("interval edges carry ambits") };
        assert_eq!(a.foci, vec![Focus::Axis(0)]);
    }
    let w = Workload { queries: vec![], atomistic: true }.with_singletons(&s.nodes);
    assert!(check_responsibility(&s, &res, &w).unwrap().passed());
    for lo in 1..=7 {
        for hi in lo..=7 {
            let mid = (lo + hi) as f64 / 2.0;
            let q = Query::ball(Point::Vector(vec![mid]), (hi - lo) as f64 / 2.0);
            let out = s.search(&q, &SearchOptions::default()).unwrap();
            assert_eq!(out.results, ((lo - 1) as PointId..hi as PointId).collect::<Vec<_>>());
        }
    }
}

#[test]
fn aesa_on_three_points_is_a_complete_digraph() {
    let space = cloud(2, 3, 2);
    let (s, _) = build_classic(space, &ids(3), IndexKind::Aesa).unwrap();
    assert_eq!(s.edges.len(), 6);
    assert!(s.edges.iter().all(Edge::is_negative));
    let f = IndexFile::from_sprawl(&s, Some(IndexKind::Aesa), None);
    assert_eq!(f.edges.len(), 6);
}

#[test]
fn empty_dataset_is_a_build_error() {
    let space = Arc::new(ComparisonSpace::euclidean(&[vec![0.0]]).unwrap());
    assert!(build_classic(space, &[], IndexKind::BallTree).is_err());
}

#[test]
fn index_file_for_2000_points_searches_correctly() {
    let space = cloud(1, 2000, 8);
    let (s, res) = build_classic(space.clone(), &ids(2000), IndexKind::BallTree).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ball.json");
    IndexFile::from_sprawl(&s, Some(IndexKind::BallTree), Some(&res)).save(&path).unwrap();
    let t = IndexFile::load(&path).unwrap().to_sprawl().unwrap();
    let c = vec![0.5; 8];
    let out = t.search(&Query::ball(Point::Vector(c.clone()), 0.6), &SearchOptions::default()).unwrap();
    assert_eq!(out.results, scan(&space, &c, 0.6));
}

#[test]
fn monotone_and_corner_examples() {
    let p = RemotenessMap::power(vec![1.0], 0.5).unwrap();
    assert!(overlap_monotone(&p, 2.0, &[9.0], 1.0).unwrap());
    assert!(overlap_corner(&RemotenessMap::Hamacher, &[0.0], &[0.5, 0.5], 0.5).unwrap());
    assert_eq!(RemotenessMap::power(vec![1.0, 1.0], 1.0).unwrap().eval_component(0, &[2.0, 3.0]), 5.0);
    assert_eq!(RemotenessMap::metaball(vec![1.0], Some(vec![1.0])).unwrap().eval_component(0, &[0.0]), 0.0);
}

#[test]
fn lp_examples() {
    let mut p = LpProblem::new(vec![1.0]);
    p.constrain(vec![1.0], Sense::Le, 3.0);
    let LpOutcome::Optimal { x, value } = solve_lp(&p).unwrap() else { panic!() };
    assert!((x[0] - 3.0).abs() < 1e-12 && (value - 3.0).abs() < 1e-12);

    let mut p = LpProblem::new(vec![1.0]);
    p.constrain(vec![1.0], Sense::Le, -1.0);
    assert_eq!(solve_lp(&p).unwrap(), LpOutcome::Infeasible);
}

/// max over ‖a‖₁ = 1 of a·ẑ − max_j a·x_j. Along each edge of the
/// cross-polytope the objective is linear minus a convex max, hence concave,
/// so a ternary search per edge finds the maximum.
fn ell_by_edges(x: &[Vec<f64>], zhat: &[f64]) -> f64 {
    let f = |a: [f64; 2]| {
        let r = x.iter().map(|c| a[0] * c[0] + a[1] * c[1]).fold(f64::NEG_INFINITY, f64::max);
        a[0] * zhat[0] + a[1] * zhat[1] - r
    };
    let corners = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
    let mut best = f64::NEG_INFINITY;
    for k in 0..4 {
        let (p, q) = (corners[k], corners[(k + 1) % 4]);
        let at = |t: f64| f([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..200 {
            let (m1, m2) = (a + (b - a) / 3.0, b - (b - a) / 3.0);
            if at(m1) < at(m2) {
                a = m1;
            } else {
                b = m2;
            }
        }
        best = best.max(at(a)).max(at(0.0));
    }
    best
}

#[test]
fn facet_lp_agrees_with_grid_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let n = rng.random_range(1..=6);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)]).collect();
        let zhat = vec![rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)];
        let s = optimal_facet(&TrainingSet::new(x.clone(), zhat.clone()).unwrap()).unwrap();
        let g = ell_by_edges(&x, &zhat).max(0.0);
        assert!((s.ell - g).abs() < 1e-4, "{} vs {g}", s.ell);
        assert!(s.ell >= g - 1e-9);
    }
}

#[test]
fn facet_with_query_on_a_column_is_degenerate() {
    let x = vec![vec![1.0, 2.0], vec![3.0, 0.5], vec![2.0, 2.0]];
    let s = optimal_facet(&TrainingSet::new(x.clone(), x[1].clone()).unwrap()).unwrap();
    assert!(s.ell.abs() < 1e-9);
    assert!(s.degenerate);
}

#[test]
fn single_focus_radius_is_the_farthest_point() {
    let x = vec![vec![1.5], vec![4.0], vec![0.5]];
    let r = min_radius(&TrainingSet::new(x, vec![0.0]).unwrap()).unwrap();
    assert!((r.r - 4.0).abs() < 1e-9);
}

#[test]
fn hull_examples() {
    let a = hull_ambit(&[vec![2.0], vec![5.0], vec![3.0]], vec![Focus::Node(0)]).unwrap();
    assert!(a.contains_features(&[2.0]) && a.contains_features(&[5.0]));
    assert!(!a.contains_features(&[1.9]) && !a.contains_features(&[5.1]));
    assert_eq!(a.radii.len(), 2);

    let sq = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![0.5, 0.5]];
    let h = hull_ambit(&sq, vec![Focus::Node(0), Focus::Node(1)]).unwrap();
    assert_eq!(h.radii.len(), 4);
}

#[test]
fn facet_clustering() {
    let x = vec![vec![1.0, 1.0], vec![1.5, 1.2], vec![1.2, 1.6]];
    let single = optimal_facet(&TrainingSet::from_queries(x.clone(), &[vec![4.0, 4.0]]).unwrap()).unwrap();
    let one = cluster_facets(&x, &[vec![4.0, 4.0]], 1, FacetMode::Lp25, 0).unwrap();
    assert_eq!(one.solutions[0], single);

    // Three query clusters around two foci: one far along each axis and one diagonal.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let centers = [[6.0, 1.3], [1.3, 6.0], [5.0, 5.0]];
    let mut qf = Vec::new();
    for c in centers {
        for _ in 0..10 {
            qf.push(vec![c[0] + rng.random_range(-0.2..0.2), c[1] + rng.random_range(-0.2..0.2)]);
        }
    }
    let fs = cluster_facets(&x, &qf, 3, FacetMode::Lp25, 1).unwrap();
    assert_eq!(fs.rows.len(), 3);
    let amb = fs.into_ambit(vec![Focus::Node(0), Focus::Node(1)]).unwrap();
    for c in &x {
        assert!(amb.contains_features_tol(c));
    }
    for c in centers {
        assert!(!amb.contains_features(&c), "cluster at {c:?} not separated");
    }
}

#[test]
fn two_approximation_examples() {
    let space = cloud(30, 9, 2);
    let pts = ids(9);
    let one = two_approx_foci(&space, &pts, 1).unwrap();
    let best = pts
        .iter()
        .map(|&p| radius_for(&space, vec![p], pts.iter().copied().filter(|&u| u != p).collect()).unwrap().r)
        .fold(f64::INFINITY, f64::min);
    assert!(one.r <= 2.0 * best + 1e-9);

    let same = Arc::new(ComparisonSpace::euclidean(&vec![vec![1.0, 1.0]; 5]).unwrap());
    assert_eq!(two_approx_foci(&same, &ids(5), 2).unwrap().r, 0.0);
}

#[test]
fn runoff_examples() {
    let space = cloud(31, 12, 2);
    let resp: Vec<PointId> = (3..10).collect();
    let queries = vec![Point::Vector(vec![2.0, 2.0]), Point::Vector(vec![-1.0, 0.5])];
    let out = runoff_foci(&space, &[0, 1, 2], &resp, &queries, 3).unwrap();
    assert_eq!(out.foci, vec![0, 1, 2]);
    assert_eq!(out.first, out.second);

    // A dominating set of a star-plus-path graph is found among all candidates.
    let edges = [(0, 1), (0, 2), (0, 3), (4, 5), (4, 6)];
    let eps = 0.5;
    let g = build_hardness_gadget(7, &edges, eps).unwrap();
    let q = Point::Index(7);
    let out = runoff_foci(&g, &ids(7), &ids(7), &[q], 2).unwrap();
    assert!(out.second.ell >= eps - 1e-9, "ℓ′ {}", out.second.ell);
    let x = features(&g, &[0, 4], &[1, 2, 3, 5, 6]);
    let exact = optimal_facet(&TrainingSet::new(x, vec![3.0 + eps; 2]).unwrap()).unwrap();
    assert!(out.second.ell <= exact.ell + 1e-9);
}

#[test]
fn alpha_search_examples() {
    let x = vec![vec![1.0, 4.0], vec![2.0, 2.0], vec![4.0, 1.0], vec![3.0, 3.0]];
    let queries = vec![vec![6.0, 6.0], vec![7.0, 5.5]];
    let r = alpha_search(&x, &queries).unwrap();
    assert!(r.bound >= alpha_objective(&x, &queries, 1.0).unwrap() - 1e-9);
    let grid_best = r.grid.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
    assert!(r.bound >= grid_best - 1e-9);
    assert!((alpha_objective(&x, &queries, r.alpha).unwrap() - r.bound).abs() < 1e-9);
    assert_eq!(r.grid.len(), 20);
}

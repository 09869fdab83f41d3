use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sprawl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sprawl")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = sprawl(args);
    assert!(o.status.success(), "{args:?} failed: {}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn uniform(dir: &TempDir, count: usize, dims: usize, seed: u64) -> String {
    let data = p(dir, "data.txt");
    ok(&["gen", "--count", &count.to_string(), "--dims", &dims.to_string(), "--seed", &seed.to_string(), "-o", &data]);
    data
}

fn scan_distances(data: &str, center: &[f64]) -> Vec<(f64, u32)> {
    let text = std::fs::read_to_string(data).unwrap();
    let mut d: Vec<(f64, u32)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let v: Vec<f64> = l.split_whitespace().map(|t| t.parse().unwrap()).collect();
            (v.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(), i as u32)
        })
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d
}

#[test]
fn dnf_verdicts_agree_on_a_tautology() {
    let out = ok(&["verify", "--dnf", "(x&y)|(!x)|(!y&x)"]);
    assert!(out.contains("tautology: yes"), "{out}");
    assert!(out.contains("sprawl correct: yes"), "{out}");
    assert!(out.contains("verdicts agree"));
}

#[test]
fn dnf_verdicts_agree_on_a_non_tautology() {
    let out = ok(&["verify", "--dnf", "(x&y)|(!x)"]);
    assert!(out.contains("tautology: no") && out.contains("sprawl correct: no"), "{out}");
}

#[test]
fn axioms_pass() {
    let out = ok(&["verify", "--axioms", "--seed", "7", "--count", "200"]);
    assert!(out.contains("200/200"), "{out}");
}

#[test]
fn properties_pass() {
    ok(&["verify", "--properties", "--count", "100"]);
}

#[test]
fn responsibility_of_a_ball_tree_passes() {
    let dir = TempDir::new().unwrap();
    let data = uniform(&dir, 300, 4, 2);
    let index = p(&dir, "index.json");
    ok(&["build", &data, "--kind", "ball-tree", "-o", &index]);
    assert!(ok(&["verify", "--responsibility", &index]).contains("responsibility: pass"));
}

#[test]
fn aesa_on_three_points_stores_six_edges() {
    let dir = TempDir::new().unwrap();
    let data = p(&dir, "three.txt");
    std::fs::write(&data, "0 0\n1 0\n0 2\n").unwrap();
    let index = p(&dir, "aesa.json");
    let out = ok(&["build", &data, "--kind", "aesa", "-o", &index]);
    assert!(out.contains("6 edges"), "{out}");
    let file: sprawl::persist::IndexFile = sprawl::persist::IndexFile::load(Path::new(&index)).unwrap();
    assert_eq!(file.edges.len(), 6);
}

#[test]
fn empty_dataset_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let data = p(&dir, "empty.txt");
    std::fs::write(&data, "# nothing here\n\n").unwrap();
    let o = sprawl(&["build", &data, "-o", &p(&dir, "x.json")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn parse_errors_name_the_line() {
    let dir = TempDir::new().unwrap();
    let data = p(&dir, "bad.txt");
    std::fs::write(&data, "1 2\n3 4\n5 oops\n").unwrap();
    let o = sprawl(&["build", &data, "-o", &p(&dir, "x.json")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.txt:3"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(sprawl(&["verify"]).status.code(), Some(2));
    assert_eq!(sprawl(&["no-such-command"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let data = uniform(&dir, 20, 3, 0);
    let index = p(&dir, "i.json");
    ok(&["build", &data, "-o", &index]);
    let o = sprawl(&["query", &index, "--center", "0.5,0.5", "--radius", "1"]);
    assert_eq!(o.status.code(), Some(2), "dimension mismatch");
}

#[test]
fn zero_radius_returns_the_point_and_its_duplicates() {
    let dir = TempDir::new().unwrap();
    let data = p(&dir, "dups.txt");
    std::fs::write(&data, "0 0\n1 1\n0.5 0.5\n1 1\n2 0\n").unwrap();
    for kind in ["ball-tree", "aesa", "laesa", "pm-tree"] {
        let index = p(&dir, "i.json");
        ok(&["build", &data, "--kind", kind, "--pivots", "2", "-o", &index]);
        let out = ok(&["query", &index, "--center", "1,1", "--radius", "0"]);
        let ids: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).map(|l| l.split('\t').next().unwrap()).collect();
        assert_eq!(ids, ["1", "3"], "{kind}");
    }
}

#[test]
fn knn_matches_the_ten_smallest_scan_distances() {
    let dir = TempDir::new().unwrap();
    let data = uniform(&dir, 500, 5, 4);
    let index = p(&dir, "i.json");
    ok(&["build", &data, "--kind", "pm-tree", "-o", &index]);
    let center = [0.3, 0.6, 0.5, 0.1, 0.9];
    let arg = center.map(|x| x.to_string()).join(",");
    let out = ok(&["query", &index, "--center", &arg, "--knn", "10"]);
    let got: Vec<(u32, f64)> = out
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let (id, d) = l.split_once('\t').unwrap();
            (id.parse().unwrap(), d.parse().unwrap())
        })
        .collect();
    let want = scan_distances(&data, &center);
    assert_eq!(got.len(), 10);
    for ((id, d), (wd, wid)) in got.iter().zip(&want) {
        assert_eq!(id, wid);
        assert!((d - wd).abs() < 1e-12);
    }
}

#[test]
fn random_ball_bench_agrees_with_the_oracle() {
    let dir = TempDir::new().unwrap();
    let data = uniform(&dir, 1000, 4, 5);
    for kind in ["ball-tree", "laesa", "pm-tree"] {
        let index = p(&dir, "i.json");
        ok(&["build", &data, "--kind", kind, "-o", &index]);
        let out = ok(&["bench", &index, "--random", "100", "--selectivity", "0.02"]);
        assert!(out.contains("oracle agreement: 100/100"), "{kind}: {out}");
        let out = ok(&["bench", &index, "--random", "30", "--mode", "knn", "--k", "5", "--eager"]);
        assert!(out.contains("oracle agreement: 30/30"), "{kind}: {out}");
    }
}

#[test]
fn bench_reads_query_files() {
    let dir = TempDir::new().unwrap();
    let data = uniform(&dir, 200, 2, 6);
    let index = p(&dir, "i.json");
    ok(&["build", &data, "-o", &index]);
    let queries = p(&dir, "q.txt");
    std::fs::write(&queries, "0.5 0.5\n0.1,0.9\n").unwrap();
    let out = ok(&["bench", &index, "--queries", &queries, "--radius", "0.2", "--per-query"]);
    assert!(out.contains("query 1:") && out.contains("oracle agreement: 2/2"), "{out}");
}

#[test]
fn levenshtein_index_round_trip() {
    let dir = TempDir::new().unwrap();
    let data = p(&dir, "words.txt");
    std::fs::write(&data, "kitten\nsitting\nmitten\nfitting\nbitten\nsit\n").unwrap();
    let index = p(&dir, "i.json");
    ok(&["build", &data, "--space", "levenshtein", "--kind", "aesa", "-o", &index]);
    let out = ok(&["query", &index, "--center", "kitten", "--radius", "1"]);
    let ids: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(ids, ["0", "2", "4"]);
    assert!(ok(&["bench", &index, "--random", "20", "--radius", "2"]).contains("20/20"));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let data = uniform(&dir, 300, 2, 9);
    let index = p(&dir, "i.json");
    ok(&["build", &data, "--kind", "laesa", "-o", &index]);
    let first = std::fs::read(&index).unwrap();
    ok(&["build", &data, "--kind", "laesa", "-o", &index]);
    assert_eq!(first, std::fs::read(&index).unwrap());

    let runs: Vec<Vec<String>> = (0..2)
        .map(|_| {
            vec![
                ok(&["gen", "--kind", "clustered", "--count", "50", "--dims", "3", "--seed", "11"]),
                ok(&["bench", &index, "--random", "40", "--seed", "3", "--per-query"]),
                ok(&["verify", "--properties", "--count", "30", "--seed", "5"]),
                ok(&["optimize", &data, "--choose", "2", "--facets", "2", "--seed", "1"]),
                ok(&["plot", "--foci", "0,0;1,0", "--power", "1,1", "--alpha", "0.5", "--radii", "1.8", "--resolution", "64"]),
            ]
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_ne!(ok(&["gen", "--count", "5", "--dims", "2", "--seed", "1"]), ok(&["gen", "--count", "5", "--dims", "2", "--seed", "2"]));
}

/// Segment endpoints of the first path in an SVG, in pixel coordinates.
fn segments(svg: &str) -> Vec<[f64; 4]> {
    let d = svg.split("d=\"").nth(1).unwrap().split('"').next().unwrap();
    d.split('M')
        .filter(|s| !s.is_empty())
        .map(|s| {
            let v: Vec<f64> = s.replace('L', " ").split_whitespace().map(|t| t.parse().unwrap()).collect();
            [v[0], v[1], v[2], v[3]]
        })
        .collect()
}

#[test]
fn bifocal_sum_draws_a_closed_curve() {
    let svg = ok(&["plot", "--foci", "0,0;1,0", "--linear", "1,1", "--radii", "2", "--resolution", "128"]);
    let segs = segments(&svg);
    assert!(segs.len() > 100);
    // Closed: every endpoint is shared by exactly two segments.
    let key = |x: f64, y: f64| ((x * 100.0).round() as i64, (y * 100.0).round() as i64);
    let mut count = std::collections::HashMap::new();
    for s in &segs {
        *count.entry(key(s[0], s[1])).or_insert(0) += 1;
        *count.entry(key(s[2], s[3])).or_insert(0) += 1;
    }
    assert!(count.values().all(|&c| c == 2));
    assert_eq!(svg.matches("<circle").count(), 2);
}

#[test]
fn difference_at_zero_draws_the_bisector() {
    let svg = ok(&["plot", "--foci", "0,0;1,0", "--linear", "1,-1", "--radii", "0", "--bounds", "-1,-1,2,1"]);
    // x = 0.5 lies at pixel 512 * 1.5 / 3.
    for s in segments(&svg) {
        assert!((s[0] - 256.0).abs() < 0.01 && (s[2] - 256.0).abs() < 0.01, "{s:?}");
    }
}

#[test]
fn plot_rejects_non_planar_indexes() {
    let dir = TempDir::new().unwrap();
    let data = uniform(&dir, 20, 3, 0);
    let index = p(&dir, "i.json");
    ok(&["build", &data, "-o", &index]);
    assert_eq!(sprawl(&["plot", "--index", &index]).status.code(), Some(2));
}

#[test]
fn plot_draws_an_index_region() {
    let dir = TempDir::new().unwrap();
    let data = uniform(&dir, 50, 2, 3);
    let index = p(&dir, "i.json");
    ok(&["build", &data, "-o", &index]);
    let svg = ok(&["plot", "--index", &index, "--edge", "0", "--resolution", "64"]);
    assert!(!segments(&svg).is_empty());
}

#[test]
fn demo_prints_a_certificate_for_a_non_tautology() {
    let out = ok(&["demo-dnf", "(x&y)|(!x)"]);
    assert!(out.contains("sprawl correct: no") && out.contains("maximal traversal missing phi"), "{out}");
    let out = ok(&["demo-dnf", "x|!x"]);
    assert!(out.contains("sprawl correct: yes") && !out.contains("missing"), "{out}");
}

#[test]
fn optimize_fits_an_ambit_around_the_data() {
    let dir = TempDir::new().unwrap();
    let data = uniform(&dir, 60, 2, 8);
    let queries = p(&dir, "q.txt");
    std::fs::write(&queries, "5 5\n6 5\n5 6\n").unwrap();
    let out = ok(&["optimize", &data, "--foci", "0,1,2", "--queries", &queries, "--alpha-search"]);
    assert!(out.contains("data inside the ambit: 57/57"), "{out}");
    assert!(out.contains("training queries with a positive bound: 3/3"), "{out}");
    let out = ok(&["optimize", &data, "--choose", "2", "--method", "runoff", "--mode", "minrad"]);
    assert!(out.contains("foci: ["), "{out}");
}

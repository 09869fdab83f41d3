//! Classic metric indexes expressed as sprawls, each with a responsibility
//! assignment that certifies it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Edge, Region, ResponsibilityAssignment, Sprawl};
use crate::ambit::Ambit;
use crate::comparison::{ComparisonSpace, Focus, PointId, SpaceKind};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum IndexKind {
    BallTree,
    Aesa,
    Laesa { pivots: usize },
    PmTree { arity: usize, pivots: usize },
    SortedIntervalTree,
}

/// Greedy max-min pivot selection starting at `ids[0]`; ties go to the
/// earlier id in `ids`.
pub fn farthest_first(space: &ComparisonSpace, ids: &[PointId], m: usize) -> Vec<PointId> {
    let m = m.min(ids.len());
    if m == 0 {
        return Vec::new();
    }
    let mut out = vec![ids[0]];
    let mut near: Vec<f64> = ids.iter().map(|&u| space.delta(ids[0], u)).collect();
    while out.len() < m {
        let mut best = 0;
        for i in 1..ids.len() {
            if near[i] > near[best] {
                best = i;
            }
        }
        if near[best] <= 0.0 && out.contains(&ids[best]) {
            break;
        }
        let p = ids[best];
        out.push(p);
        for (i, &u) in ids.iter().enumerate() {
            near[i] = near[i].min(space.delta(p, u));
        }
    }
    out
}

struct Builder {
    sprawl: Sprawl,
    res: ResponsibilityAssignment,
}

impl Builder {
    fn edge(&mut self, e: Edge, res: Vec<PointId>) {
        self.sprawl.edges.push(e);
        self.res.edges.push(res);
    }

    fn root(&mut self, r: PointId, res: Vec<PointId>) {
        self.sprawl.roots.push(r);
        self.res.roots.push(res);
    }
}

pub fn build_classic(
    space: Arc<ComparisonSpace>,
    ids: &[PointId],
    kind: IndexKind,
) -> Result<(Sprawl, ResponsibilityAssignment)> {
    if ids.is_empty() {
        return Err(Error::Param("cannot build an index over no points".into()));
    }
    for &v in ids {
        if v as usize >= space.len() {
            return Err(Error::Index(v as usize));
        }
    }
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Param("duplicate point ids".into()));
    }
    let mut b = Builder { sprawl: Sprawl::new(space.clone(), ids.to_vec()), res: Default::default() };
    if ids.is_empty() {
        return Ok((b.sprawl, b.res));
    }
    match kind {
        IndexKind::BallTree => {
            ball_tree(&mut b, &space, ids, 2)?;
        }
        IndexKind::Aesa => {
            for &p in ids {
                b.root(p, vec![p]);
            }
            for &p in ids {
                for &u in ids {
                    if p != u {
                        b.edge(Edge::negative(&[p], u, Region::sphere(p, space.delta(p, u))), vec![]);
                    }
                }
            }
        }
        IndexKind::Laesa { pivots } => {
            if pivots == 0 {
                return Err(Error::Param("LAESA needs at least one pivot".into()));
            }
            let piv = farthest_first(&space, ids, pivots);
            let rest: Vec<PointId> = ids.iter().copied().filter(|u| !piv.contains(u)).collect();
            for &p in &piv {
                // Every pivot sources each unconditional edge.
                let mut res = vec![p];
                res.extend(&rest);
                b.root(p, res);
            }
            for &u in &rest {
                for &p in &piv {
                    b.edge(Edge::negative(&[p], u, Region::sphere(p, space.delta(p, u))), vec![]);
                }
                b.edge(Edge::positive(&piv, u, None), vec![u]);
            }
        }
        IndexKind::PmTree { arity, pivots } => {
            let piv = farthest_first(&space, ids, pivots);
            for &p in &piv {
                if p != ids[0] {
                    b.root(p, vec![p]);
                }
            }
            let subtrees = ball_tree(&mut b, &space, ids, arity)?;
            for &p in &piv {
                for (u, sub) in &subtrees {
                    if *u == ids[0] || piv.contains(u) {
                        continue;
                    }
                    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                    for &w in sub {
                        let d = space.delta(p, w);
                        lo = lo.min(d);
                        hi = hi.max(d);
                    }
                    let e = Edge::negative(&[p], *u, Region::Shell { focus: p, inner: lo, outer: hi }).lazy();
                    b.edge(e, vec![]);
                }
            }
        }
        IndexKind::SortedIntervalTree => sorted_interval_tree(&mut b, &space, ids)?,
    }
    Ok((b.sprawl, b.res))
}

/// Recursive ball partitioning rooted at `ids[0]`. Returns every node with
/// its subtree.
fn ball_tree(
    b: &mut Builder,
    space: &ComparisonSpace,
    ids: &[PointId],
    arity: usize,
) -> Result<Vec<(PointId, Vec<PointId>)>> {
    if arity < 2 {
        return Err(Error::Param("tree arity must be at least 2".into()));
    }
    let root = ids[0];
    b.root(root, ids.to_vec());
    let mut subtrees = vec![(root, ids.to_vec())];
    let mut stack = vec![(root, ids[1..].to_vec())];
    while let Some((c, members)) = stack.pop() {
        if members.is_empty() {
            continue;
        }
        let far = |from: PointId, among: &[PointId]| {
            let mut best = among[0];
            for &u in among {
                if space.delta(from, u) > space.delta(from, best) {
                    best = u;
                }
            }
            best
        };
        let s1 = far(c, &members);
        let mut seeds = vec![s1];
        let mut near: Vec<f64> = members.iter().map(|&u| space.delta(s1, u)).collect();
        while seeds.len() < arity.min(members.len()) {
            let mut best = 0;
            for i in 0..members.len() {
                if near[i] > near[best] {
                    best = i;
                }
            }
            if near[best] <= 0.0 {
                // Only exact duplicates of seeds remain; take any unused member.
                match members.iter().position(|u| !seeds.contains(u)) {
                    Some(i) => best = i,
                    None => break,
                }
            }
            let s = members[best];
            seeds.push(s);
            for (i, &u) in members.iter().enumerate() {
                near[i] = near[i].min(space.delta(s, u));
            }
        }
        let mut groups: Vec<Vec<PointId>> = seeds.iter().map(|&s| vec![s]).collect();
        for &u in &members {
            if seeds.contains(&u) {
                continue;
            }
            let mut best = 0;
            for (j, &s) in seeds.iter().enumerate() {
                if space.delta(s, u) < space.delta(seeds[best], u) {
                    best = j;
                }
            }
            groups[best].push(u);
        }
        for (s, g) in seeds.into_iter().zip(groups) {
            let radius = g.iter().map(|&u| space.delta(c, u)).fold(0.0, f64::max);
            b.edge(Edge::positive(&[c], s, Some(Region::Ball { focus: c, radius })), g.clone());
            subtrees.push((s, g.clone()));
            stack.push((s, g[1..].to_vec()));
        }
    }
    Ok(subtrees)
}

/// Keys of a bulk-loaded 2-3 tree node and its children, in order.
struct Node23 {
    keys: Vec<usize>,
    children: Vec<Node23>,
}

/// Splits the sorted positions `lo..hi` into a 2-3 tree of height `h`.
fn load23(lo: usize, hi: usize, h: u32) -> Node23 {
    let n = hi - lo;
    if h == 1 {
        return Node23 { keys: (lo..hi).collect(), children: Vec::new() };
    }
    let (cmin, cmax) = (2usize.pow(h - 1) - 1, 3usize.pow(h - 1) - 1);
    for k in 1..=2usize {
        let rest = n - k;
        if n < k || (k + 1) * cmin > rest || rest > (k + 1) * cmax {
            continue;
        }
        let (base, extra) = (rest / (k + 1), rest % (k + 1));
        let mut keys = Vec::new();
        let mut children = Vec::new();
        let mut at = lo;
        for j in 0..=k {
            let size = base + usize::from(j < extra);
            children.push(load23(at, at + size, h - 1));
            at += size;
            if j < k {
                keys.push(at);
                at += 1;
            }
        }
        return Node23 { keys, children };
    }
    unreachable!("2-3 tree sizes are contiguous")
}

fn sorted_interval_tree(b: &mut Builder, space: &ComparisonSpace, ids: &[PointId]) -> Result<()> {
    if !matches!(space.kind(), SpaceKind::Projection { dim: 1 }) {
        return Err(Error::Capability("sorted-interval-tree needs a one-dimensional projection space".into()));
    }
    let x = |v: PointId| space.vector(v).expect("vector space")[0];
    let mut order = ids.to_vec();
    order.sort_by(|&u, &v| x(u).total_cmp(&x(v)).then(u.cmp(&v)));
    let n = order.len();
    let mut h = 1;
    while 3usize.pow(h) - 1 < n {
        h += 1;
    }
    let tree = load23(0, n, h);

    fn subtree(node: &Node23, out: &mut Vec<usize>) {
        out.extend(&node.keys);
        for c in &node.children {
            subtree(c, out);
        }
    }
    for &k in &tree.keys {
        b.root(order[k], order.clone());
    }
    let mut stack = vec![&tree];
    while let Some(node) = stack.pop() {
        for (j, child) in node.children.iter().enumerate() {
            let lo = (j > 0).then(|| order[node.keys[j - 1]]);
            let hi = node.keys.get(j).map(|&k| order[k]);
            let mut rows = Vec::new();
            let mut radii = Vec::new();
            if let Some(h) = hi {
                rows.push(vec![1.0]);
                radii.push(x(h));
            }
            if let Some(l) = lo {
                rows.push(vec![-1.0]);
                radii.push(-x(l));
            }
            let sources: Vec<PointId> = lo.into_iter().chain(hi).collect();
            let region = Region::Ambit(Box::new(Ambit::linear(vec![Focus::Axis(0)], rows, radii)?));
            let mut res = Vec::new();
            subtree(child, &mut res);
            let res: Vec<PointId> = res.into_iter().map(|i| order[i]).collect();
            for &k in &child.keys {
                b.edge(Edge::positive(&sources, order[k], Some(region.clone())), res.clone());
            }
            stack.push(child);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparison::{Point, Query, Workload};
    use crate::sprawl::{check_responsibility, SearchOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect()
    }

    fn kinds() -> Vec<IndexKind> {
        vec![
            IndexKind::BallTree,
            IndexKind::Aesa,
            IndexKind::Laesa { pivots: 4 },
            IndexKind::PmTree { arity: 3, pivots: 3 },
        ]
    }

    #[test]
    fn load23_sizes() {
        for n in 1..200usize {
            let mut h = 1;
            while 3usize.pow(h) - 1 < n {
                h += 1;
            }
            let t = load23(0, n, h);
            fn walk(t: &Node23, depth: u32, h: u32, out: &mut Vec<usize>) {
                assert!((1..=2).contains(&t.keys.len()));
                if depth == h {
                    assert!(t.children.is_empty());
                } else {
                    assert_eq!(t.children.len(), t.keys.len() + 1);
                }
                for (j, c) in t.children.iter().enumerate() {
                    walk(c, depth + 1, h, out);
                    if j < t.keys.len() {
                        out.push(t.keys[j]);
                    }
                }
                if t.children.is_empty() {
                    out.extend(&t.keys);
                }
            }
            let mut inorder = Vec::new();
            walk(&t, 1, h, &mut inorder);
            assert_eq!(inorder, (0..n).collect::<Vec<_>>(), "n={n}");
        }
    }

    #[test]
    fn classic_indexes_are_responsible_and_exact() {
        let rows = cloud(120, 3, 7);
        let space = Arc::new(ComparisonSpace::euclidean(&rows).unwrap());
        let ids: Vec<PointId> = (0..120).collect();
        let w = Workload::default().with_singletons(&ids);
        for kind in kinds() {
            let (s, res) = build_classic(space.clone(), &ids, kind).unwrap();
            s.validate().unwrap();
            let rep = check_responsibility(&s, &res, &w).unwrap();
            assert!(rep.passed(), "{kind:?}: {:?}", &rep.violations[..rep.violations.len().min(3)]);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..20 {
                let c: Vec<f64> = (0..3).map(|_| rng.random()).collect();
                let q = Query::ball(Point::Vector(c.clone()), rng.random_range(0.05..0.4));
                let out = s.search(&q, &SearchOptions::default()).unwrap();
                assert_eq!(out.results, s.scan(&q).unwrap(), "{kind:?}");
                let k = Query::knn(Point::Vector(c), 5);
                let out = s.search(&k, &SearchOptions::default()).unwrap();
                assert_eq!(out.results.len(), 5);
            }
        }
    }

    #[test]
    fn sorted_interval_tree_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..300).map(|_| vec![(rng.random_range(0..100) as f64) / 10.0]).collect();
        let space = Arc::new(ComparisonSpace::projection(&rows).unwrap());
        let ids: Vec<PointId> = (0..300).collect();
        let (s, res) = build_classic(space.clone(), &ids, IndexKind::SortedIntervalTree).unwrap();
        s.validate().unwrap();
        let w = Workload::default().with_singletons(&ids);
        assert!(check_responsibility(&s, &res, &w).unwrap().passed());
        for _ in 0..50 {
            let q = Query::ball(Point::Vector(vec![rng.random_range(-1.0..11.0)]), rng.random_range(0.0..2.0));
            let out = s.search(&q, &SearchOptions::default()).unwrap();
            assert_eq!(out.results, s.scan(&q).unwrap());
        }
        let e = ComparisonSpace::euclidean(&rows).unwrap();
        assert!(build_classic(Arc::new(e), &ids, IndexKind::SortedIntervalTree).is_err());
    }

    #[test]
    fn farthest_first_is_greedy() {
        let rows: Vec<Vec<f64>> = [0.0, 1.0, 10.0, 4.0, 6.0].iter().map(|&x| vec![x]).collect();
        let space = ComparisonSpace::euclidean(&rows).unwrap();
        assert_eq!(farthest_first(&space, &[0, 1, 2, 3, 4], 3), vec![0, 2, 3]);
    }
}

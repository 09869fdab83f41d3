//! Rebuilding a sprawl from the behaviour of an opaque index on singleton
//! point queries.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{Edge, Label, Region, Sprawl};
use crate::comparison::{ComparisonSpace, Focus, PointId};
use crate::error::{Error, Result};
use crate::optimize::hull_ambit;

/// What one activation round discovers and eliminates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceOutcome {
    pub discovered: BTreeSet<PointId>,
    pub eliminated: BTreeSet<PointId>,
}

/// `oracle(S, v)` reports what becomes discovered and eliminated for the
/// query {v} once exactly the nodes in S are traversed.
///
/// Source sets are searched breadth-first by size up to `max_sources`
/// (at most 3), stopping at the first size that adds no edge. An edge
/// S → t is created when S is minimal for t on some query: its positive
/// region is the hull of the queries it discovers t for, its negative region
/// the hull of the queries that do not eliminate t.
pub fn emulate_from_traces<F>(
    space: Arc<ComparisonSpace>,
    nodes: &[PointId],
    mut oracle: F,
    max_sources: usize,
) -> Result<Sprawl>
where
    F: FnMut(&[PointId], PointId) -> Result<TraceOutcome>,
{
    if max_sources > 3 {
        return Err(Error::Param("emulation searches source sets of size at most 3".into()));
    }
    let mut v: Vec<PointId> = nodes.to_vec();
    v.sort_unstable();
    v.dedup();
    let mut out = Sprawl::new(space.clone(), v.clone());
    let mut traces: BTreeMap<Vec<PointId>, Vec<TraceOutcome>> = BTreeMap::new();

    for size in 0..=max_sources.min(v.len()) {
        let mut added = false;
        for s in subsets(&v, size) {
            let mut row = Vec::with_capacity(v.len());
            for &q in &v {
                row.push(oracle(&s, q)?);
            }
            // Per target: queries where S is minimal for discovery / elimination.
            let mut disc: BTreeMap<PointId, Vec<PointId>> = BTreeMap::new();
            let mut elim: BTreeMap<PointId, Vec<PointId>> = BTreeMap::new();
            for (qi, &q) in v.iter().enumerate() {
                let here = &row[qi];
                let mut below_d = BTreeSet::new();
                let mut below_e = BTreeSet::new();
                for x in 0..s.len() {
                    let mut smaller = s.clone();
                    smaller.remove(x);
                    let t = &traces[&smaller][qi];
                    for &d in &t.discovered {
                        if !here.discovered.contains(&d) {
                            return Err(Error::Emulation(format!(
                                "{d} is discovered from {smaller:?} but not from {s:?} for query {q}"
                            )));
                        }
                    }
                    for &d in &t.eliminated {
                        if !here.eliminated.contains(&d) {
                            return Err(Error::Emulation(format!(
                                "{d} is eliminated from {smaller:?} but not from {s:?} for query {q}"
                            )));
                        }
                    }
                    below_d.extend(t.discovered.iter().copied());
                    below_e.extend(t.eliminated.iter().copied());
                }
                for &t in here.discovered.difference(&below_d) {
                    disc.entry(t).or_default().push(q);
                }
                for &t in here.eliminated.difference(&below_e) {
                    elim.entry(t).or_default().push(q);
                }
            }
            let targets: BTreeSet<PointId> = disc.keys().chain(elim.keys()).copied().collect();
            for t in targets {
                let d = disc.get(&t).map(Vec::as_slice).unwrap_or(&[]);
                let e = elim.get(&t).map(Vec::as_slice).unwrap_or(&[]);
                if s.is_empty() && e.is_empty() && d.len() == v.len() {
                    out.roots.push(t);
                    added = true;
                    continue;
                }
                let positive: Label = if d.is_empty() {
                    smallvec::smallvec![Region::Empty]
                } else if d.len() == v.len() {
                    Label::new()
                } else {
                    smallvec::smallvec![enclose(&space, &s, d)?]
                };
                let negative: Label = if e.is_empty() {
                    Label::new()
                } else {
                    let keep: Vec<PointId> = v.iter().copied().filter(|q| !e.contains(q)).collect();
                    if keep.is_empty() {
                        smallvec::smallvec![Region::Empty]
                    } else {
                        smallvec::smallvec![enclose(&space, &s, &keep)?]
                    }
                };
                out.edges.push(Edge::new(&s, t, positive, negative));
                added = true;
            }
            traces.insert(s, row);
        }
        if !added && size > 0 {
            break;
        }
    }
    Ok(out)
}

/// Smallest linear ambit on foci `s` containing the feature vectors of
/// `points`; a finite point region when there are no foci.
fn enclose(space: &ComparisonSpace, s: &[PointId], points: &[PointId]) -> Result<Region> {
    if s.is_empty() {
        return Ok(Region::points(points));
    }
    let x: Vec<Vec<f64>> = points.iter().map(|&u| s.iter().map(|&p| space.delta(p, u)).collect()).collect();
    let foci = s.iter().map(|&p| Focus::Node(p)).collect();
    Ok(Region::Ambit(Box::new(hull_ambit(&x, foci)?)))
}

fn subsets(v: &[PointId], k: usize) -> Vec<Vec<PointId>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > v.len() {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| v[i]).collect());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < v.len() - k + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

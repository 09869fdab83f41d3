//! The sprawl index: a hypergraph over data points whose edges carry
//! positive (discovery) and negative (elimination) regions.
//!
//! For a fixed query every edge collapses to a sign: negative if the query
//! misses some region in N(e), positive if it meets every region in
//! P(e) ∪ N(e), absent otherwise. Searching a sprawl is traversing that
//! signed hyperdigraph, with regions evaluated only when an edge activates.

mod build;
mod check;
mod emulate;
mod search;

pub use build::{build_classic, farthest_first, IndexKind};
pub use check::{
    build_dnf_gadget, check_correct_capped, check_correct_small, check_responsibility, node_responsibility,
    Certificate, CorrectnessReport, Dnf, Law, ResponsibilityReport, Violation,
};
pub use emulate::{emulate_from_traces, TraceOutcome};
pub use search::{SearchOptions, SearchOutcome, Searcher};

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::ambit::{table1_region, Ambit, Table1};
use crate::comparison::{ComparisonSpace, Focus, PointId, PointRef, Query, Session, TOL};
use crate::error::{Error, Result};
use crate::hypergraph::{Sign, SignedHyperdigraph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    Universe,
    Empty,
    /// Same as the linear ambit `δ(focus, u) ≤ radius`.
    Ball { focus: PointId, radius: f64 },
    /// Same as the linear ambit with rows (1), (−1) and radii (outer, −inner).
    Shell { focus: PointId, inner: f64, outer: f64 },
    Ambit(Box<Ambit>),
    /// Finite point set with exact intersection.
    Points(Box<[PointId]>),
}

impl Region {
    pub fn sphere(focus: PointId, radius: f64) -> Self {
        Region::Shell { focus, inner: radius, outer: radius }
    }

    pub fn points(ids: &[PointId]) -> Self {
        let mut v = ids.to_vec();
        v.sort_unstable();
        v.dedup();
        Region::Points(v.into_boxed_slice())
    }

    pub fn foci(&self) -> SmallVec<[Focus; 2]> {
        match self {
            Region::Ball { focus, .. } | Region::Shell { focus, .. } => smallvec::smallvec![Focus::Node(*focus)],
            Region::Ambit(a) => a.foci.iter().copied().collect(),
            _ => SmallVec::new(),
        }
    }

    /// The general ambit form of the compact ball and shell variants.
    pub fn to_ambit(&self) -> Option<Ambit> {
        match self {
            Region::Ball { focus, radius } => table1_region(Table1::Ball(*radius), vec![Focus::Node(*focus)]).ok(),
            Region::Shell { focus, inner, outer } => {
                table1_region(Table1::Shell { inner: *inner, outer: *outer }, vec![Focus::Node(*focus)]).ok()
            }
            Region::Ambit(a) => Some((**a).clone()),
            _ => None,
        }
    }

    /// Exact membership of a stored point.
    pub fn contains(&self, space: &ComparisonSpace, u: PointId) -> Result<bool> {
        Ok(match self {
            Region::Universe => true,
            Region::Empty => false,
            Region::Ball { focus, radius } => space.delta(*focus, u) <= *radius,
            Region::Shell { focus, inner, outer } => {
                let d = space.delta(*focus, u);
                d <= *outer && -d <= -*inner
            }
            Region::Ambit(a) => a.membership(space, PointRef::Node(u))?,
            Region::Points(p) => p.binary_search(&u).is_ok(),
        })
    }
}

pub type Label = SmallVec<[Region; 1]>;

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub sources: SmallVec<[PointId; 2]>,
    pub target: PointId,
    pub positive: Label,
    pub negative: Label,
    pub lazy: bool,
}

impl Edge {
    pub fn new(sources: &[PointId], target: PointId, positive: Label, negative: Label) -> Self {
        let mut s: SmallVec<[PointId; 2]> = sources.iter().copied().collect();
        s.sort_unstable();
        s.dedup();
        Self { sources: s, target, positive, negative, lazy: false }
    }

    /// Edge that can only eliminate: P = {∅}.
    pub fn negative(sources: &[PointId], target: PointId, region: Region) -> Self {
        Self::new(sources, target, smallvec::smallvec![Region::Empty], smallvec::smallvec![region])
    }

    pub fn positive(sources: &[PointId], target: PointId, region: Option<Region>) -> Self {
        Self::new(sources, target, region.into_iter().collect(), Label::new())
    }

    pub fn lazy(mut self) -> Self {
        self.lazy = true;
        self
    }

    /// P(e) contains the empty region, so the edge never discovers.
    pub fn is_negative(&self) -> bool {
        self.positive.iter().any(|r| matches!(r, Region::Empty))
    }
}

#[derive(Clone, Debug)]
pub struct Sprawl {
    pub space: Arc<ComparisonSpace>,
    /// Ground set V.
    pub nodes: Vec<PointId>,
    pub roots: Vec<PointId>,
    pub edges: Vec<Edge>,
}

/// Per-edge node sets, plus one set per root's implicit edge.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResponsibilityAssignment {
    pub edges: Vec<Vec<PointId>>,
    pub roots: Vec<Vec<PointId>>,
}

impl Sprawl {
    pub fn new(space: Arc<ComparisonSpace>, nodes: Vec<PointId>) -> Self {
        Self { space, nodes, roots: Vec::new(), edges: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.space.len();
        let mut in_v = vec![false; n];
        for &v in &self.nodes {
            if v as usize >= n {
                return Err(Error::Index(v as usize));
            }
            in_v[v as usize] = true;
        }
        let check = |v: PointId, what: &str| {
            if (v as usize) < n && in_v[v as usize] {
                Ok(())
            } else {
                Err(Error::Structure(format!("{what} {v} is not in the ground set")))
            }
        };
        for &r in &self.roots {
            check(r, "root")?;
        }
        for (i, e) in self.edges.iter().enumerate() {
            check(e.target, "target")?;
            for &s in &e.sources {
                check(s, "source")?;
            }
            for r in e.positive.iter().chain(&e.negative) {
                for f in r.foci() {
                    if let Focus::Node(p) = f {
                        if !e.sources.contains(&p) {
                            return Err(Error::Structure(format!("edge {i}: focus {p} is not a source")));
                        }
                    }
                }
                if let Region::Points(p) = r {
                    for &u in p.iter() {
                        if u as usize >= n {
                            return Err(Error::Index(u as usize));
                        }
                    }
                }
            }
            if e.lazy && !(e.is_negative() && e.positive.len() == 1 && !e.negative.is_empty()) {
                return Err(Error::Structure(format!("edge {i}: lazy edges must be purely negative")));
            }
            if e.sources.contains(&e.target) {
                log::warn!("edge {i} lists its target as a source and can never fire");
            }
        }
        Ok(())
    }

    /// The signed hyperdigraph this sprawl induces for `q`; node ids are point ids.
    pub fn reduce_to_signed(&self, q: &Query) -> Result<SignedHyperdigraph> {
        q.validate()?;
        let mut ev = Evaluator::new(&self.space, q, true);
        let mut g = SignedHyperdigraph::new(self.space.len());
        for &r in &self.roots {
            g.add_edge(&[], r, Sign::Positive)?;
        }
        for e in &self.edges {
            match ev.judge(e)? {
                Judgement::Eliminate => g.add_edge(&e.sources, e.target, Sign::Negative)?,
                Judgement::Keep { discover: true, .. } => g.add_edge(&e.sources, e.target, Sign::Positive)?,
                Judgement::Keep { .. } => {}
            }
        }
        Ok(g)
    }

    /// Outcome of activating every edge whose sources lie in `traversed`
    /// (roots included) for query `q`.
    pub fn trace(&self, traversed: &[PointId], q: &Query) -> Result<TraceOutcome> {
        let mut ev = Evaluator::new(&self.space, q, true);
        let t: BTreeSet<PointId> = traversed.iter().copied().collect();
        let mut out = TraceOutcome::default();
        out.discovered.extend(self.roots.iter().copied());
        for e in &self.edges {
            if e.sources.iter().all(|s| t.contains(s)) {
                match ev.judge(e)? {
                    Judgement::Eliminate => {
                        out.eliminated.insert(e.target);
                    }
                    Judgement::Keep { discover: true, .. } => {
                        out.discovered.insert(e.target);
                    }
                    _ => {}
                }
            }
        }
        Ok(out)
    }

    /// Linear scan: every ground-set member of `q`, sorted by id.
    pub fn scan(&self, q: &Query) -> Result<Vec<PointId>> {
        let mut s = Session::new(&self.space);
        let mut out = Vec::new();
        for &v in &self.nodes {
            if q.contains(&mut s, v)? {
                out.push(v);
            }
        }
        out.sort_unstable();
        Ok(out)
    }
}

pub(crate) enum Judgement {
    Eliminate,
    Keep { discover: bool, lb_negative: f64, lb_positive: f64 },
}

/// Query-side state for region checks: cached query radients per point.
pub(crate) struct Evaluator<'a> {
    pub session: Session<'a>,
    space: &'a ComparisonSpace,
    kind: QKind<'a>,
    k: usize,
    epoch: u32,
    stamp: Vec<u32>,
    vals: Vec<f64>,
    axis: Vec<Option<Vec<f64>>>,
    pub radius: f64,
    pub want_bounds: bool,
    strict: bool,
    pub fallbacks: u64,
    pub region_evaluations: u64,
}

#[derive(Clone, Copy)]
enum QKind<'a> {
    Ball(&'a crate::comparison::Point),
    Ambit(&'a crate::comparison::AmbitQuery),
    Set(&'a [PointId]),
}

impl<'a> Evaluator<'a> {
    pub fn new(space: &'a ComparisonSpace, q: &'a Query, strict: bool) -> Self {
        let mut ev = Self {
            session: Session::new(space),
            space,
            kind: QKind::Set(&[]),
            k: 0,
            epoch: 0,
            stamp: vec![0; space.len()],
            vals: Vec::new(),
            axis: Vec::new(),
            radius: 0.0,
            want_bounds: false,
            strict,
            fallbacks: 0,
            region_evaluations: 0,
        };
        ev.begin(q);
        ev
    }

    /// Resets caches for a new query.
    pub fn begin(&mut self, q: &'a Query) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.session = Session::new(self.space);
        self.fallbacks = 0;
        self.region_evaluations = 0;
        self.axis.clear();
        let (kind, k, radius) = match q {
            Query::Ball { center, radius, .. } => (QKind::Ball(center), 1, *radius),
            Query::Ambit(a) => (QKind::Ambit(a), a.foci.len(), a.radius),
            Query::Set(s) => (QKind::Set(s), 0, 0.0),
        };
        self.kind = kind;
        self.k = k;
        self.radius = radius;
        if self.vals.len() != self.space.len() * k {
            self.vals = vec![0.0; self.space.len() * k];
        }
    }

    /// Query radients of a stored point: δ(v, q) for balls, δ(v, q_j) for ambit queries.
    pub fn radients(&mut self, v: PointId) -> Result<&[f64]> {
        let i = v as usize;
        if self.stamp[i] != self.epoch {
            match self.kind {
                QKind::Ball(c) => self.vals[i] = self.session.compare_to(v, c)?,
                QKind::Ambit(a) => {
                    for j in 0..self.k {
                        self.vals[i * self.k + j] = self.session.compare_to(v, &a.foci[j])?;
                    }
                }
                QKind::Set(_) => {}
            }
            self.stamp[i] = self.epoch;
        }
        Ok(&self.vals[i * self.k..(i + 1) * self.k])
    }

    fn focus_radients(&mut self, f: Focus, out: &mut SmallVec<[f64; 4]>) -> Result<()> {
        match f {
            Focus::Node(p) => {
                let r = self.radients(p)?;
                out.extend_from_slice(r);
            }
            Focus::Axis(i) => {
                let i = i as usize;
                if self.axis.len() <= i {
                    self.axis.resize(i + 1, None);
                }
                if self.axis[i].is_none() {
                    let vals = match self.kind {
                        QKind::Ball(c) => vec![self
                            .session
                            .compare(PointRef::Axis(i as u32), PointRef::External(c))?],
                        QKind::Ambit(a) => a
                            .foci
                            .iter()
                            .map(|q| self.session.compare(PointRef::Axis(i as u32), PointRef::External(q)))
                            .collect::<Result<Vec<_>>>()?,
                        QKind::Set(_) => Vec::new(),
                    };
                    self.axis[i] = Some(vals);
                }
                out.extend_from_slice(self.axis[i].as_ref().unwrap());
            }
        }
        Ok(())
    }

    fn capability(&mut self, e: Error) -> Result<bool> {
        match e {
            Error::Capability(msg) if !self.strict => {
                if self.fallbacks == 0 {
                    log::warn!("treating region as overlapping: {msg}");
                }
                self.fallbacks += 1;
                Ok(true)
            }
            e => Err(e),
        }
    }

    /// Conservative: never false when the region meets the query.
    pub fn overlaps(&mut self, r: &Region) -> Result<bool> {
        self.region_evaluations += 1;
        match self.overlaps_inner(r) {
            Ok(b) => Ok(b),
            Err(e) => self.capability(e),
        }
    }

    fn overlaps_inner(&mut self, r: &Region) -> Result<bool> {
        match (r, self.kind) {
            (Region::Empty, _) => Ok(false),
            (Region::Universe, QKind::Set(s)) => Ok(!s.is_empty()),
            (Region::Universe, _) => Ok(true),
            (Region::Points(p), QKind::Set(s)) => Ok(p.iter().any(|u| s.contains(u))),
            (Region::Points(p), QKind::Ball(_)) => {
                let s = self.radius;
                for &u in p.iter() {
                    if self.radients(u)?[0] <= s {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            (Region::Points(p), QKind::Ambit(a)) => {
                for &u in p.iter() {
                    let y = self.radients(u)?;
                    if crate::ambit::dot(&a.weights, y) <= a.radius {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            (_, QKind::Set(s)) => {
                for &u in s {
                    if self.set_member_in(r, u)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            (_, QKind::Ball(_)) if self.radius.is_infinite() => Ok(true),
            (Region::Ball { focus, radius }, QKind::Ball(_)) => {
                let z = self.radients(*focus)?[0];
                Ok(radius + self.radius >= z - TOL)
            }
            (Region::Shell { focus, inner, outer }, QKind::Ball(_)) => {
                let z = self.radients(*focus)?[0];
                let s = self.radius;
                Ok(outer + s >= z - TOL && -inner + s >= -z - TOL)
            }
            (Region::Ambit(a), QKind::Ball(_)) => {
                let mut z = SmallVec::<[f64; 4]>::new();
                for &f in &a.foci {
                    self.focus_radients(f, &mut z)?;
                }
                a.overlaps_ball(&z, self.radius, self.space.is_symmetric())
            }
            (_, QKind::Ambit(q)) => {
                let amb = r.to_ambit().expect("ball, shell or ambit");
                let mut zs = Vec::with_capacity(amb.foci.len());
                for &f in &amb.foci {
                    let mut z = SmallVec::<[f64; 4]>::new();
                    self.focus_radients(f, &mut z)?;
                    zs.push(z.to_vec());
                }
                crate::ambit::overlap_linear(&amb.map, &amb.radii, &q.weights, q.radius, &zs, self.space.is_symmetric())
            }
        }
    }

    fn set_member_in(&mut self, r: &Region, u: PointId) -> Result<bool> {
        Ok(match r {
            Region::Ball { focus, radius } => self.session.compare_nodes(*focus, u) <= radius + TOL,
            Region::Shell { focus, inner, outer } => {
                let d = self.session.compare_nodes(*focus, u);
                d <= outer + TOL && d >= inner - TOL
            }
            Region::Ambit(a) => {
                let mut x = Vec::with_capacity(a.foci.len());
                for &f in &a.foci {
                    x.push(self.session.compare(f.into(), PointRef::Node(u))?);
                }
                a.contains_features_tol(&x)
            }
            Region::Universe => true,
            Region::Empty => false,
            Region::Points(p) => p.contains(&u),
        })
    }

    /// Lower bound on δ(u, q) over region members for ball queries; 0 otherwise.
    pub fn lower_bound(&mut self, r: &Region) -> Result<f64> {
        if !matches!(self.kind, QKind::Ball(_)) {
            return Ok(0.0);
        }
        Ok(match r {
            Region::Universe | Region::Points(_) => 0.0,
            Region::Empty => f64::INFINITY,
            Region::Ball { focus, radius } => (self.radients(*focus)?[0] - radius).max(0.0),
            Region::Shell { focus, inner, outer } => {
                let z = self.radients(*focus)?[0];
                (z - outer).max(inner - z).max(0.0)
            }
            Region::Ambit(a) => {
                let mut z = SmallVec::<[f64; 4]>::new();
                for &f in &a.foci {
                    self.focus_radients(f, &mut z)?;
                }
                a.ball_lower_bound(&z)
            }
        })
    }

    /// Sign of an active edge: eliminate if some negative region misses the
    /// query, discover if every region meets it.
    pub fn judge(&mut self, e: &Edge) -> Result<Judgement> {
        let mut lb_negative: f64 = 0.0;
        for r in &e.negative {
            if !self.overlaps(r)? {
                return Ok(Judgement::Eliminate);
            }
            if self.want_bounds {
                lb_negative = lb_negative.max(self.lower_bound(r)?);
            }
        }
        let mut lb_positive: f64 = 0.0;
        for r in &e.positive {
            if !self.overlaps(r)? {
                return Ok(Judgement::Keep { discover: false, lb_negative, lb_positive });
            }
            if self.want_bounds {
                lb_positive = lb_positive.max(self.lower_bound(r)?);
            }
        }
        Ok(Judgement::Keep { discover: true, lb_negative, lb_positive })
    }
}

//! Range and kNN search over a sprawl.

use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;

use super::{Evaluator, Judgement, Sprawl};
use crate::ambit::dot;
use crate::comparison::{PointId, Query, TOL};
use crate::error::Result;
use crate::hypergraph::{Heuristic, Queue, Status, Topology};

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOptions {
    pub heuristic: Heuristic,
    /// Treat lazy edges like ordinary ones.
    pub eager: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { heuristic: Heuristic::LowerBound, eager: false }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchOutcome {
    /// Range: members sorted by id. kNN: nearest first, ties by id.
    pub results: Vec<PointId>,
    /// δ(v, center) per result for ball queries.
    pub distances: Vec<f64>,
    pub traversal: Vec<PointId>,
    pub distance_computations: u64,
    pub region_evaluations: u64,
    /// Region checks that had no sound test and were treated as overlapping.
    pub fallbacks: u64,
}

/// Reusable search state over one sprawl; reset between queries by epoch.
pub struct Searcher<'s> {
    sprawl: &'s Sprawl,
    lazy_topo: Topology,
    eager_topo: Option<Topology>,
    lazy_in: Vec<Vec<u32>>,
    epoch: u32,
    stamp: Vec<u32>,
    status: Vec<Status>,
    disc_lb: Vec<f64>,
    spare_lb: Vec<f64>,
    rem_stamp: Vec<u32>,
    remaining: Vec<u32>,
    /// Lazy edges already checked against the current query.
    checked: Vec<u32>,
    /// Position in the traversal, valid for traversed nodes.
    traversed_at: Vec<u32>,
    queue: Queue,
    seq: i64,
}

impl<'s> Searcher<'s> {
    pub fn new(sprawl: &'s Sprawl) -> Self {
        let n = sprawl.space.len();
        let edges = &sprawl.edges;
        let any_lazy = edges.iter().any(|e| e.lazy);
        let mut lazy_topo =
            Topology::build(n, edges.iter().map(|e| if e.lazy { &[][..] } else { e.sources.as_slice() }));
        lazy_topo.sourceless.retain(|&e| !edges[e as usize].lazy);
        let eager_topo = any_lazy.then(|| Topology::build(n, edges.iter().map(|e| e.sources.as_slice())));
        let mut lazy_in = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.lazy {
                lazy_in[e.target as usize].push(i as u32);
            }
        }
        Self {
            sprawl,
            lazy_topo,
            eager_topo,
            lazy_in,
            epoch: 0,
            stamp: vec![0; n],
            status: vec![Status::Undiscovered; n],
            disc_lb: vec![f64::INFINITY; n],
            spare_lb: vec![0.0; n],
            rem_stamp: vec![0; edges.len()],
            remaining: vec![0; edges.len()],
            checked: vec![0; edges.len()],
            traversed_at: vec![0; n],
            queue: Queue::new(n),
            seq: 0,
        }
    }

    fn status(&self, v: PointId) -> Status {
        if self.stamp[v as usize] == self.epoch {
            self.status[v as usize]
        } else {
            Status::Undiscovered
        }
    }

    fn set_status(&mut self, v: PointId, s: Status) {
        let i = v as usize;
        if self.stamp[i] != self.epoch {
            self.stamp[i] = self.epoch;
            self.disc_lb[i] = f64::INFINITY;
            self.spare_lb[i] = 0.0;
        }
        self.status[i] = s;
    }

    fn bound(&self, v: PointId) -> f64 {
        self.disc_lb[v as usize].max(self.spare_lb[v as usize])
    }

    fn enqueue(&mut self, v: PointId, h: &Heuristic) {
        let key = match h {
            Heuristic::LowerBound => self.bound(v),
            Heuristic::Priority(k) => k[v as usize],
            _ => 0.0,
        };
        if !self.queue.contains(v) {
            self.seq += 1;
        }
        let tb = if *h == Heuristic::Lifo { -self.seq } else { self.seq };
        self.queue.upsert(v, key, tb);
    }

    fn discover(&mut self, v: PointId, lb: f64, h: &Heuristic) {
        match self.status(v) {
            Status::Traversed | Status::Eliminated => return,
            Status::Undiscovered => self.set_status(v, Status::Available),
            Status::Available => {}
        }
        let i = v as usize;
        self.disc_lb[i] = self.disc_lb[i].min(lb);
        self.enqueue(v, h);
    }

    fn fire(&mut self, ev: &mut Evaluator, e: u32, h: &Heuristic, lazy: bool) -> Result<()> {
        let edge = &self.sprawl.edges[e as usize];
        let t = edge.target;
        if matches!(self.status(t), Status::Traversed | Status::Eliminated) {
            return Ok(());
        }
        // A target that is about to be reached is settled by its ready lazy
        // edges first, so their verdict can spare the positive regions.
        if lazy && !edge.is_negative() && self.lazily_eliminated(ev, t)? {
            self.set_status(t, Status::Eliminated);
            self.queue.remove(t);
            return Ok(());
        }
        match ev.judge(edge)? {
            Judgement::Eliminate => {
                self.set_status(t, Status::Eliminated);
                self.queue.remove(t);
            }
            Judgement::Keep { discover, lb_negative, lb_positive } => {
                if self.stamp[t as usize] != self.epoch {
                    self.set_status(t, Status::Undiscovered);
                }
                let i = t as usize;
                self.spare_lb[i] = self.spare_lb[i].max(lb_negative);
                if discover {
                    self.discover(t, lb_negative.max(lb_positive), h);
                } else if self.status(t) == Status::Available {
                    self.enqueue(t, h);
                }
            }
        }
        Ok(())
    }

    /// Lazy negative edges into `v` whose sources are all traversed, each
    /// checked at most once per query. They are taken in the order their last
    /// source was traversed, which is the order eager evaluation would use.
    fn lazily_eliminated(&mut self, ev: &mut Evaluator, v: PointId) -> Result<bool> {
        let mut ready: Vec<(u32, u32)> = Vec::new();
        for &e in &self.lazy_in[v as usize] {
            if self.checked[e as usize] == self.epoch {
                continue;
            }
            let edge = &self.sprawl.edges[e as usize];
            if edge.sources.iter().all(|&s| self.status(s) == Status::Traversed) {
                let at = edge.sources.iter().map(|&s| self.traversed_at[s as usize]).max().unwrap_or(0);
                ready.push((at, e));
            }
        }
        ready.sort_unstable();
        for (_, e) in ready {
            self.checked[e as usize] = self.epoch;
            let edge = &self.sprawl.edges[e as usize];
            let mut lb: f64 = 0.0;
            for r in &edge.negative {
                if !ev.overlaps(r)? {
                    return Ok(true);
                }
                if ev.want_bounds {
                    lb = lb.max(ev.lower_bound(r)?);
                }
            }
            if self.stamp[v as usize] != self.epoch {
                self.set_status(v, Status::Undiscovered);
            }
            self.spare_lb[v as usize] = self.spare_lb[v as usize].max(lb);
        }
        Ok(false)
    }

    fn select(&mut self, h: &Heuristic) -> Option<PointId> {
        match h {
            Heuristic::Explicit(order) => {
                let v = order.iter().copied().find(|&v| self.status(v) == Status::Available)?;
                self.queue.remove(v);
                Some(v)
            }
            _ => self.queue.pop(),
        }
    }

    pub fn search(&mut self, q: &Query, opts: &SearchOptions) -> Result<SearchOutcome> {
        q.validate()?;
        let h = &opts.heuristic;
        h.validate(self.sprawl.space.len())?;
        let space = &*self.sprawl.space;
        let mut ev = Evaluator::new(space, q, false);
        let knn = match q {
            Query::Ball { knn, .. } => *knn,
            _ => None,
        };
        ev.want_bounds = *h == Heuristic::LowerBound || knn.is_some();
        let range = ev.radius;

        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.rem_stamp.iter_mut().for_each(|s| *s = 0);
            self.checked.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.queue.clear();
        self.seq = 0;
        let eager = opts.eager && self.eager_topo.is_some();

        let mut heap: BinaryHeap<(OrderedFloat<f64>, PointId)> = BinaryHeap::new();
        let mut out = SearchOutcome::default();
        let mut members: Vec<(PointId, f64)> = Vec::new();

        for &r in &self.sprawl.roots {
            self.discover(r, 0.0, h);
        }
        let initial = if eager { &self.eager_topo.as_ref().unwrap().sourceless } else { &self.lazy_topo.sourceless };
        for e in initial.clone() {
            self.fire(&mut ev, e, h, !eager)?;
        }

        while let Some(v) = self.select(h) {
            if knn.is_some() && self.bound(v) > ev.radius + TOL {
                // Not eliminated: a later edge may rediscover it.
                self.set_status(v, Status::Undiscovered);
                self.disc_lb[v as usize] = f64::INFINITY;
                continue;
            }
            if !eager && self.lazily_eliminated(&mut ev, v)? {
                self.set_status(v, Status::Eliminated);
                continue;
            }
            self.set_status(v, Status::Traversed);
            self.traversed_at[v as usize] = out.traversal.len() as u32;
            out.traversal.push(v);

            match q {
                Query::Ball { .. } => {
                    let d = ev.radients(v)?[0];
                    if let Some(k) = knn {
                        if d <= range {
                            heap.push((OrderedFloat(d), v));
                            if heap.len() > k {
                                heap.pop();
                            }
                            if heap.len() == k {
                                ev.radius = heap.peek().unwrap().0 .0;
                            }
                        }
                    } else if d <= range {
                        members.push((v, d));
                    }
                }
                Query::Ambit(a) => {
                    let y = ev.radients(v)?;
                    if dot(&a.weights, y) <= a.radius {
                        members.push((v, f64::NAN));
                    }
                }
                Query::Set(s) => {
                    if s.contains(&v) {
                        members.push((v, f64::NAN));
                    }
                }
            }

            let topo = if eager { self.eager_topo.as_ref().unwrap() } else { &self.lazy_topo };
            let outs: Vec<u32> = topo.out_edges(v).to_vec();
            for e in outs {
                let i = e as usize;
                if self.rem_stamp[i] != self.epoch {
                    self.rem_stamp[i] = self.epoch;
                    self.remaining[i] = self.sprawl.edges[i].sources.len() as u32;
                }
                self.remaining[i] -= 1;
                if self.remaining[i] == 0 {
                    self.fire(&mut ev, e, h, !eager)?;
                }
            }
        }

        if knn.is_some() {
            let mut v = heap.into_vec();
            v.sort_unstable();
            out.results = v.iter().map(|x| x.1).collect();
            out.distances = v.iter().map(|x| x.0 .0).collect();
        } else {
            members.sort_unstable_by_key(|m| m.0);
            out.results = members.iter().map(|m| m.0).collect();
            if matches!(q, Query::Ball { .. }) {
                out.distances = members.iter().map(|m| m.1).collect();
            }
        }
        out.distance_computations = ev.session.count();
        out.region_evaluations = ev.region_evaluations;
        out.fallbacks = ev.fallbacks;
        Ok(out)
    }
}

impl Sprawl {
    pub fn search(&self, q: &Query, opts: &SearchOptions) -> Result<SearchOutcome> {
        Searcher::new(self).search(q, opts)
    }
}

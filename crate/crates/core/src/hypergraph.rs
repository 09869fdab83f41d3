//! Signed directed hypergraphs and their traversals.
//!
//! An edge becomes active once all of its sources are traversed. Active
//! positive edges discover their target, active negative edges eliminate it,
//! and elimination is permanent. A heuristic picks which available node to
//! traverse next. [`enumerate_repertoire`] branches over every such choice.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use ordered_float::OrderedFloat;
use rand::Rng;

use crate::error::{Error, Result};

pub type NodeId = u32;

/// Default node cap for exhaustive enumeration.
pub const ENUMERATION_CAP: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignedEdge {
    pub sources: Vec<NodeId>,
    pub target: NodeId,
    pub sign: Sign,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SignedHyperdigraph {
    pub node_count: usize,
    pub edges: Vec<SignedEdge>,
}

impl SignedHyperdigraph {
    pub fn new(node_count: usize) -> Self {
        Self { node_count, edges: Vec::new() }
    }

    pub fn add_edge(&mut self, sources: &[NodeId], target: NodeId, sign: Sign) -> Result<()> {
        for &v in sources.iter().chain([&target]) {
            if v as usize >= self.node_count {
                return Err(Error::Index(v as usize));
            }
        }
        let mut sources = sources.to_vec();
        sources.sort_unstable();
        sources.dedup();
        if sources.contains(&target) {
            log::warn!("edge into {target} lists its target as a source and can never fire");
        }
        self.edges.push(SignedEdge { sources, target, sign });
        Ok(())
    }

    pub fn root(&mut self, v: NodeId) -> Result<()> {
        self.add_edge(&[], v, Sign::Positive)
    }

    pub fn topology(&self) -> Topology {
        Topology::build(self.node_count, self.edges.iter().map(|e| e.sources.as_slice()))
    }

    /// Line-oriented text: a `nodes N` header, then `sign target <- sources`.
    pub fn to_text(&self) -> String {
        let mut out = format!("nodes {}\n", self.node_count);
        for e in &self.edges {
            let sign = if e.sign == Sign::Positive { '+' } else { '-' };
            let _ = write!(out, "{sign} {} <-", e.target);
            for s in &e.sources {
                let _ = write!(out, " {s}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut graph: Option<Self> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = i + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| Error::Parse { line: lineno, msg: msg.to_string() };
            let Some(g) = graph.as_mut() else {
                let n = line
                    .strip_prefix("nodes")
                    .and_then(|r| r.trim().parse::<usize>().ok())
                    .ok_or_else(|| bad("expected `nodes N` header"))?;
                graph = Some(Self::new(n));
                continue;
            };
            let (head, tail) = line.split_once("<-").ok_or_else(|| bad("missing `<-`"))?;
            let mut head = head.split_whitespace();
            let sign = match head.next() {
                Some("+") => Sign::Positive,
                Some("-") => Sign::Negative,
                _ => return Err(bad("sign must be + or -")),
            };
            let target = head.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad target"))?;
            if head.next().is_some() {
                return Err(bad("one target per edge"));
            }
            let sources = tail
                .split_whitespace()
                .map(|t| t.parse::<NodeId>().map_err(|_| bad("bad source id")))
                .collect::<Result<Vec<_>>>()?;
            g.add_edge(&sources, target, sign).map_err(|e| bad(&e.to_string()))?;
        }
        graph.ok_or(Error::Parse { line: 0, msg: "empty graph text".into() })
    }
}

pub fn format_traversal(seq: &[NodeId]) -> String {
    if seq.is_empty() {
        "ε".to_string()
    } else {
        seq.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
    }
}

/// Compressed out-edge lists and source counts.
#[derive(Clone, Debug, Default)]
pub struct Topology {
    offsets: Vec<u32>,
    out: Vec<u32>,
    pub source_count: Vec<u32>,
    pub sourceless: Vec<u32>,
}

impl Topology {
    pub fn build<'a, I>(node_count: usize, sources: I) -> Self
    where
        I: IntoIterator<Item = &'a [NodeId]>,
    {
        let mut degree = vec![0u32; node_count + 1];
        let mut source_count = Vec::new();
        let mut sourceless = Vec::new();
        let mut pairs = Vec::new();
        for (e, src) in sources.into_iter().enumerate() {
            source_count.push(src.len() as u32);
            if src.is_empty() {
                sourceless.push(e as u32);
            }
            for &s in src {
                degree[s as usize + 1] += 1;
                pairs.push((s, e as u32));
            }
        }
        for i in 1..degree.len() {
            degree[i] += degree[i - 1];
        }
        let mut fill = degree.clone();
        let mut out = vec![0u32; pairs.len()];
        for (s, e) in pairs {
            out[fill[s as usize] as usize] = e;
            fill[s as usize] += 1;
        }
        Self { offsets: degree, out, source_count, sourceless }
    }

    pub fn out_edges(&self, v: NodeId) -> &[u32] {
        let v = v as usize;
        &self.out[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Undiscovered,
    Available,
    Traversed,
    Eliminated,
}

/// Traversal heuristic. Smaller keys are traversed first; ties go by
/// insertion order.
#[derive(Clone, Debug, PartialEq)]
pub enum Heuristic {
    Fifo,
    Lifo,
    /// Static key per node id.
    Priority(Vec<f64>),
    /// Traverse the earliest listed available node; stop when none is listed.
    Explicit(Vec<NodeId>),
    /// Region lower bounds, computed during sprawl search (FIFO on plain graphs).
    LowerBound,
}

impl Heuristic {
    pub fn validate(&self, node_count: usize) -> Result<()> {
        match self {
            Heuristic::Priority(k) if k.len() != node_count => {
                Err(Error::Dimension { expected: node_count, got: k.len() })
            }
            Heuristic::Explicit(order) => {
                let mut seen = HashSet::new();
                for &v in order {
                    if v as usize >= node_count {
                        return Err(Error::Index(v as usize));
                    }
                    if !seen.insert(v) {
                        return Err(Error::Param(format!("node {v} repeated in explicit order")));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

type QueueKey = (OrderedFloat<f64>, i64, NodeId);

/// Available nodes keyed by (priority, tiebreak). Each node appears at most once.
#[derive(Clone, Debug, Default)]
pub struct Queue {
    set: BTreeSet<QueueKey>,
    entry: Vec<Option<QueueKey>>,
}

impl Queue {
    pub fn new(node_count: usize) -> Self {
        Self { set: BTreeSet::new(), entry: vec![None; node_count] }
    }

    pub fn clear(&mut self) {
        for k in std::mem::take(&mut self.set) {
            self.entry[k.2 as usize] = None;
        }
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.entry[v as usize].is_some()
    }

    pub fn key(&self, v: NodeId) -> Option<f64> {
        self.entry[v as usize].map(|k| k.0 .0)
    }

    /// Inserts `v`, or moves it to `key` keeping its tiebreak.
    pub fn upsert(&mut self, v: NodeId, key: f64, tiebreak: i64) {
        let tb = match self.entry[v as usize].take() {
            Some(old) => {
                self.set.remove(&old);
                old.1
            }
            None => tiebreak,
        };
        let k = (OrderedFloat(key), tb, v);
        self.set.insert(k);
        self.entry[v as usize] = Some(k);
    }

    pub fn remove(&mut self, v: NodeId) {
        if let Some(k) = self.entry[v as usize].take() {
            self.set.remove(&k);
        }
    }

    pub fn peek(&self) -> Option<(f64, NodeId)> {
        self.set.first().map(|k| (k.0 .0, k.2))
    }

    pub fn pop(&mut self) -> Option<NodeId> {
        let k = self.set.pop_first()?;
        self.entry[k.2 as usize] = None;
        Some(k.2)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.set.iter().map(|k| k.2)
    }
}

/// Private state of one traversal over a static signed hyperdigraph.
#[derive(Clone, Debug)]
pub struct TraversalState {
    pub status: Vec<Status>,
    pub remaining_sources: Vec<u32>,
    pub used: Vec<bool>,
    pub queue: Queue,
    pub order: Vec<NodeId>,
    seq: i64,
}

impl TraversalState {
    pub fn start(g: &SignedHyperdigraph, topo: &Topology, h: &Heuristic) -> Self {
        let mut st = Self {
            status: vec![Status::Undiscovered; g.node_count],
            remaining_sources: topo.source_count.clone(),
            used: vec![false; g.edges.len()],
            queue: Queue::new(g.node_count),
            order: Vec::new(),
            seq: 0,
        };
        let initial = topo.sourceless.clone();
        st.fire(g, h, &initial);
        st
    }

    fn fire(&mut self, g: &SignedHyperdigraph, h: &Heuristic, edges: &[u32]) {
        for &e in edges {
            self.used[e as usize] = true;
            let edge = &g.edges[e as usize];
            let t = edge.target;
            match (self.status[t as usize], edge.sign) {
                (Status::Traversed | Status::Eliminated, _) => {}
                (_, Sign::Negative) => {
                    self.status[t as usize] = Status::Eliminated;
                    self.queue.remove(t);
                }
                (Status::Available, Sign::Positive) => {}
                (Status::Undiscovered, Sign::Positive) => {
                    self.status[t as usize] = Status::Available;
                    self.seq += 1;
                    let (key, tb) = match h {
                        Heuristic::Lifo => (0.0, -self.seq),
                        Heuristic::Priority(k) => (k[t as usize], self.seq),
                        _ => (0.0, self.seq),
                    };
                    self.queue.upsert(t, key, tb);
                }
            }
        }
    }

    pub fn select(&self, h: &Heuristic) -> Option<NodeId> {
        match h {
            Heuristic::Explicit(order) => {
                order.iter().copied().find(|&v| self.status[v as usize] == Status::Available)
            }
            _ => self.queue.peek().map(|(_, v)| v),
        }
    }

    pub fn available(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.queue.nodes().collect();
        v.sort_unstable();
        v
    }

    /// Traverses `v` (which must be available) and processes newly active edges.
    pub fn step(&mut self, g: &SignedHyperdigraph, topo: &Topology, h: &Heuristic, v: NodeId) {
        debug_assert_eq!(self.status[v as usize], Status::Available);
        self.queue.remove(v);
        self.status[v as usize] = Status::Traversed;
        self.order.push(v);
        let mut active = Vec::new();
        for &e in topo.out_edges(v) {
            let r = &mut self.remaining_sources[e as usize];
            *r -= 1;
            if *r == 0 {
                active.push(e);
            }
        }
        self.fire(g, h, &active);
    }
}

pub fn traverse(g: &SignedHyperdigraph, h: &Heuristic) -> Result<Vec<NodeId>> {
    h.validate(g.node_count)?;
    let topo = g.topology();
    let mut st = TraversalState::start(g, &topo, h);
    while let Some(v) = st.select(h) {
        st.step(g, &topo, h, v);
    }
    Ok(st.order)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Repertoire {
    pub traversals: BTreeSet<Vec<NodeId>>,
    /// Traversals after which no node is available.
    pub maximal: BTreeSet<Vec<NodeId>>,
}

pub fn enumerate_repertoire(g: &SignedHyperdigraph) -> Result<Repertoire> {
    enumerate_repertoire_capped(g, ENUMERATION_CAP)
}

pub fn enumerate_repertoire_capped(g: &SignedHyperdigraph, cap: usize) -> Result<Repertoire> {
    if g.node_count > cap {
        return Err(Error::Size { size: g.node_count, cap });
    }
    let topo = g.topology();
    let h = Heuristic::Fifo;
    let mut rep = Repertoire::default();
    let mut stack = vec![TraversalState::start(g, &topo, &h)];
    while let Some(st) = stack.pop() {
        let avail = st.available();
        if avail.is_empty() {
            rep.maximal.insert(st.order.clone());
        }
        for v in avail {
            let mut next = st.clone();
            next.step(g, &topo, &h, v);
            stack.push(next);
        }
        rep.traversals.insert(st.order);
    }
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axiom {
    T1,
    T2,
    T3,
    T4,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomReport {
    pub violation: Option<(Axiom, Vec<Vec<NodeId>>)>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

fn mask(seq: &[NodeId]) -> u64 {
    seq.iter().fold(0, |m, &v| m | 1 << v)
}

/// Checks non-emptiness, simplicity, heredity and the interval property.
/// Node ids must be below 64.
pub fn check_traversal_axioms(repertoire: &BTreeSet<Vec<NodeId>>, node_count: usize) -> AxiomReport {
    let fail = |a, w: Vec<Vec<NodeId>>| AxiomReport { violation: Some((a, w)) };
    if !repertoire.contains(&Vec::new()) {
        return fail(Axiom::T1, vec![]);
    }
    for s in repertoire {
        let distinct: HashSet<_> = s.iter().collect();
        if distinct.len() != s.len() || s.iter().any(|&v| v as usize >= node_count.min(64)) {
            return fail(Axiom::T2, vec![s.clone()]);
        }
        if !s.is_empty() && !repertoire.contains(&s[..s.len() - 1]) {
            return fail(Axiom::T3, vec![s.clone()]);
        }
    }
    for x in 0..node_count as NodeId {
        let ends: Vec<&Vec<NodeId>> = repertoire.iter().filter(|s| s.last() == Some(&x)).collect();
        let prefix_masks: Vec<u64> = ends.iter().map(|s| mask(&s[..s.len() - 1])).collect();
        if prefix_masks.is_empty() {
            continue;
        }
        for tau in repertoire {
            let t = mask(tau);
            if t & (1 << x) != 0 {
                continue;
            }
            let lower = prefix_masks.iter().position(|&a| a & !t == 0);
            let upper = prefix_masks.iter().position(|&w| t & !w == 0);
            if let (Some(i), Some(j)) = (lower, upper) {
                let mut tx = tau.clone();
                tx.push(x);
                if !repertoire.contains(&tx) {
                    return fail(Axiom::T4, vec![tau.clone(), ends[i].clone(), ends[j].clone()]);
                }
            }
        }
    }
    AxiomReport { violation: None }
}

/// Random graph with some roots, sources of size 0..=2 and mixed signs.
pub fn random_graph<R: Rng>(rng: &mut R, node_count: usize, edge_count: usize) -> SignedHyperdigraph {
    let mut g = SignedHyperdigraph::new(node_count);
    if node_count == 0 {
        return g;
    }
    let roots = rng.random_range(1..=node_count.min(2));
    for v in 0..roots {
        g.root(v as NodeId).unwrap();
    }
    for _ in 0..edge_count {
        let k = rng.random_range(0..=2.min(node_count));
        let sources: Vec<NodeId> = (0..k).map(|_| rng.random_range(0..node_count) as NodeId).collect();
        let target = rng.random_range(0..node_count) as NodeId;
        let sign = if rng.random_bool(0.6) { Sign::Positive } else { Sign::Negative };
        g.add_edge(&sources, target, sign).unwrap();
    }
    g
}

//! Correctness by enumeration, local responsibility laws, and the DNF gadget.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::{Edge, Region, ResponsibilityAssignment, Sprawl};
use crate::comparison::{ComparisonSpace, PointId, Query, Session, Workload};
use crate::error::{Error, Result};
use crate::hypergraph::{enumerate_repertoire_capped, ENUMERATION_CAP};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub query: usize,
    /// A maximal traversal that misses `missing`.
    pub traversal: Vec<PointId>,
    pub missing: PointId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrectnessReport {
    pub certificate: Option<Certificate>,
}

impl CorrectnessReport {
    pub fn correct(&self) -> bool {
        self.certificate.is_none()
    }
}

/// Checks that every maximal traversal of every query covers Q ∩ V.
pub fn check_correct_small(s: &Sprawl, w: &Workload) -> Result<CorrectnessReport> {
    check_correct_capped(s, w, ENUMERATION_CAP)
}

pub fn check_correct_capped(s: &Sprawl, w: &Workload, cap: usize) -> Result<CorrectnessReport> {
    if s.nodes.len() > cap {
        return Err(Error::Size { size: s.nodes.len(), cap });
    }
    if s.space.len() > 64 {
        return Err(Error::Size { size: s.space.len(), cap: 64 });
    }
    let mut session = Session::new(&s.space);
    for (qi, q) in w.queries.iter().enumerate() {
        let mut members = Vec::new();
        for &v in &s.nodes {
            if q.contains(&mut session, v)? {
                members.push(v);
            }
        }
        let g = s.reduce_to_signed(q)?;
        let rep = enumerate_repertoire_capped(&g, g.node_count)?;
        for t in &rep.maximal {
            if let Some(&m) = members.iter().find(|m| !t.contains(m)) {
                return Ok(CorrectnessReport {
                    certificate: Some(Certificate { query: qi, traversal: t.clone(), missing: m }),
                });
            }
        }
    }
    Ok(CorrectnessReport { certificate: None })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Law {
    /// res(e) lies in every positive region.
    Discovery,
    /// res(target) lies in every negative region.
    Protection,
    /// res(v) is covered by the responsibilities of v's in-edges.
    Coverage,
    Untargeted,
    NotAtomistic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub law: Law,
    pub edge: Option<usize>,
    pub node: PointId,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResponsibilityReport {
    pub violations: Vec<Violation>,
}

impl ResponsibilityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// res(v) = {v} ∪ the responsibilities of edges sourced at v.
pub fn node_responsibility(s: &Sprawl, res: &ResponsibilityAssignment) -> Vec<BTreeSet<PointId>> {
    let mut out = vec![BTreeSet::new(); s.space.len()];
    for &v in &s.nodes {
        out[v as usize].insert(v);
    }
    for (e, edge) in s.edges.iter().enumerate() {
        for &src in &edge.sources {
            out[src as usize].extend(res.edges[e].iter().copied());
        }
    }
    out
}

/// Checks the local laws that make an acyclic, fully targeted sprawl correct.
pub fn check_responsibility(s: &Sprawl, res: &ResponsibilityAssignment, w: &Workload) -> Result<ResponsibilityReport> {
    if res.edges.len() != s.edges.len() || res.roots.len() != s.roots.len() {
        return Err(Error::Structure("responsibility assignment does not match the sprawl".into()));
    }
    if let Some(v) = find_cycle(s) {
        return Err(Error::Structure(format!("node {v} lies on a cycle of non-negative edges")));
    }
    let space = &*s.space;
    let mut report = ResponsibilityReport::default();
    let mut push = |law, edge, node| report.violations.push(Violation { law, edge, node });
    if !w.queries.is_empty() && !w.is_atomistic(space, &s.nodes)? {
        push(Law::NotAtomistic, None, 0);
    }
    let node_res = node_responsibility(s, res);

    for (i, e) in s.edges.iter().enumerate() {
        for r in &e.positive {
            for &u in &res.edges[i] {
                if !r.contains(space, u)? {
                    push(Law::Discovery, Some(i), u);
                }
            }
        }
        for r in &e.negative {
            for &u in &node_res[e.target as usize] {
                if !r.contains(space, u)? {
                    push(Law::Protection, Some(i), u);
                }
            }
        }
    }

    let mut covered = vec![BTreeSet::new(); space.len()];
    let mut targeted = vec![false; space.len()];
    for (i, e) in s.edges.iter().enumerate() {
        covered[e.target as usize].extend(res.edges[i].iter().copied());
        if !e.is_negative() {
            targeted[e.target as usize] = true;
        }
    }
    for (i, &r) in s.roots.iter().enumerate() {
        covered[r as usize].extend(res.roots[i].iter().copied());
        targeted[r as usize] = true;
    }
    for &v in &s.nodes {
        if !targeted[v as usize] {
            push(Law::Untargeted, None, v);
        }
        if let Some(&u) = node_res[v as usize].iter().find(|u| !covered[v as usize].contains(u)) {
            push(Law::Coverage, None, u);
        }
    }
    Ok(report)
}

/// A node on a directed cycle through non-negative edges.
fn find_cycle(s: &Sprawl) -> Option<PointId> {
    let n = s.space.len();
    let mut succ = vec![Vec::new(); n];
    for e in s.edges.iter().filter(|e| !e.is_negative()) {
        for &src in &e.sources {
            succ[src as usize].push(e.target);
        }
    }
    // 0 unvisited, 1 on stack, 2 done
    let mut color = vec![0u8; n];
    for start in 0..n {
        if color[start] != 0 {
            continue;
        }
        let mut stack = vec![(start as PointId, 0usize)];
        color[start] = 1;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if let Some(&w) = succ[v as usize].get(*i) {
                *i += 1;
                match color[w as usize] {
                    0 => {
                        color[w as usize] = 1;
                        stack.push((w, 0));
                    }
                    1 => return Some(w),
                    _ => {}
                }
            } else {
                color[v as usize] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Disjunctive normal form: a disjunction of conjunctions of literals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dnf {
    pub variables: Vec<String>,
    /// Literals as (variable index, positive?).
    pub clauses: Vec<Vec<(usize, bool)>>,
}

impl Dnf {
    /// Parses `(x&y)|(!x)|(!y&x)`. `~` also negates; parentheses are optional.
    pub fn parse(text: &str) -> Result<Self> {
        let mut variables: Vec<String> = Vec::new();
        let mut clauses = Vec::new();
        for (ci, clause) in text.split('|').enumerate() {
            let body: String = clause.chars().filter(|c| !c.is_whitespace() && *c != '(' && *c != ')').collect();
            if body.is_empty() {
                return Err(Error::Parse { line: 1, msg: format!("clause {} is empty", ci + 1) });
            }
            let mut lits = Vec::new();
            for lit in body.split('&') {
                let (positive, name) = match lit.strip_prefix(['!', '~']) {
                    Some(rest) => (false, rest),
                    None => (true, lit),
                };
                let valid = name.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
                    && name.chars().all(|c| c.is_alphanumeric() || c == '_');
                if !valid {
                    return Err(Error::Parse { line: 1, msg: format!("bad literal {lit:?}") });
                }
                let idx = match variables.iter().position(|v| v == name) {
                    Some(i) => i,
                    None => {
                        variables.push(name.to_string());
                        variables.len() - 1
                    }
                };
                lits.push((idx, positive));
            }
            clauses.push(lits);
        }
        Ok(Self { variables, clauses })
    }

    pub fn eval(&self, assignment: u32) -> bool {
        self.clauses
            .iter()
            .any(|c| c.iter().all(|&(v, pos)| ((assignment >> v) & 1 == 1) == pos))
    }

    /// Truth-table check.
    pub fn is_tautology(&self) -> bool {
        (0..1u32 << self.variables.len()).all(|a| self.eval(a))
    }
}

impl std::fmt::Display for Dnf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let clauses: Vec<String> = self
            .clauses
            .iter()
            .map(|c| {
                let lits: Vec<String> = c
                    .iter()
                    .map(|&(v, pos)| format!("{}{}", if pos { "" } else { "!" }, self.variables[v]))
                    .collect();
                format!("({})", lits.join("&"))
            })
            .collect();
        write!(f, "{}", clauses.join("|"))
    }
}

/// Literal roots 2i (x_i) and 2i+1 (¬x_i) eliminate each other
/// unconditionally; each clause is an edge from its literals to the formula
/// node 2v whose positive region is {formula node}. The sprawl is correct for
/// the workload {{φ}} iff the formula is a tautology.
pub fn build_dnf_gadget(f: &Dnf) -> Result<(Sprawl, Workload)> {
    let v = f.variables.len();
    let n = 2 * v + 1;
    if n > ENUMERATION_CAP {
        return Err(Error::Size { size: n, cap: ENUMERATION_CAP });
    }
    let mut m = vec![1.0; n * n];
    for i in 0..n {
        m[i * n + i] = 0.0;
    }
    let space = Arc::new(ComparisonSpace::matrix(n, m, true)?);
    let phi = (2 * v) as PointId;
    let mut s = Sprawl::new(space, (0..n as PointId).collect());
    for i in 0..v as PointId {
        s.roots.extend([2 * i, 2 * i + 1]);
        s.edges.push(Edge::negative(&[2 * i], 2 * i + 1, Region::Empty));
        s.edges.push(Edge::negative(&[2 * i + 1], 2 * i, Region::Empty));
    }
    for c in &f.clauses {
        let sources: Vec<PointId> =
            c.iter().map(|&(x, pos)| 2 * x as PointId + if pos { 0 } else { 1 }).collect();
        s.edges.push(Edge::positive(&sources, phi, Some(Region::points(&[phi]))));
    }
    let w = Workload { queries: vec![Query::Set(vec![phi])], atomistic: false };
    Ok((s, w))
}

//! Universes, comparison functions, feature maps and queries.
//!
//! Every distance used by the index goes through [`ComparisonSpace`]. A
//! [`Session`] wraps a space and counts comparisons, which is the cost
//! metric reported by search.

pub mod dataset;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PointId = u32;

/// Ordering tolerance shared by all geometric checks.
pub const TOL: f64 = 1e-9;

/// A universe element that need not be stored in the space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Vector(Vec<f64>),
    Text(String),
    /// Element of an explicit-matrix universe.
    Index(u32),
}

/// A focus: a stored point, or a coordinate pseudo-focus of a projection space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Focus {
    Node(PointId),
    Axis(u32),
}

#[derive(Clone, Copy, Debug)]
pub enum PointRef<'a> {
    Node(PointId),
    Axis(u32),
    External(&'a Point),
}

impl From<Focus> for PointRef<'_> {
    fn from(f: Focus) -> Self {
        match f {
            Focus::Node(id) => PointRef::Node(id),
            Focus::Axis(i) => PointRef::Axis(i),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpaceKind {
    /// L_p over R^dim; `p` may be infinite.
    Minkowski { dim: usize, p: f64 },
    /// Vectors with one pseudo-focus per axis: δ(axis_i, x) = x_i.
    /// Point-to-point comparison is the L-inf distance.
    Projection { dim: usize },
    Matrix { n: usize },
    Levenshtein,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Storage {
    Vectors { dim: usize, coords: Vec<f64> },
    Strings(Vec<Vec<char>>),
    Matrix { n: usize, values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonSpace {
    kind: SpaceKind,
    symmetric: bool,
    storage: Storage,
}

impl ComparisonSpace {
    pub fn euclidean(rows: &[Vec<f64>]) -> Result<Self> {
        Self::minkowski(2.0, rows)
    }

    pub fn minkowski(p: f64, rows: &[Vec<f64>]) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::Param(format!("Minkowski exponent {p} < 1 is not a metric")));
        }
        let (dim, coords) = flatten(rows)?;
        Ok(Self {
            kind: SpaceKind::Minkowski { dim, p },
            symmetric: true,
            storage: Storage::Vectors { dim, coords },
        })
    }

    pub fn projection(rows: &[Vec<f64>]) -> Result<Self> {
        let (dim, coords) = flatten(rows)?;
        Ok(Self {
            kind: SpaceKind::Projection { dim },
            symmetric: true,
            storage: Storage::Vectors { dim, coords },
        })
    }

    pub fn levenshtein<S: AsRef<str>>(strings: &[S]) -> Self {
        Self {
            kind: SpaceKind::Levenshtein,
            symmetric: true,
            storage: Storage::Strings(strings.iter().map(|s| s.as_ref().chars().collect()).collect()),
        }
    }

    /// Explicit `n × n` comparison matrix in row-major order.
    pub fn matrix(n: usize, values: Vec<f64>, symmetric: bool) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Dimension { expected: n * n, got: values.len() });
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::Param(format!("diagonal entry {i} is nonzero")));
            }
            for j in 0..n {
                let x = values[i * n + j];
                if !(x >= 0.0) || !x.is_finite() {
                    return Err(Error::Param(format!("entry ({i},{j}) = {x} is not a finite nonnegative value")));
                }
                if symmetric && x != values[j * n + i] {
                    return Err(Error::Param(format!("entry ({i},{j}) differs from its transpose")));
                }
            }
        }
        Ok(Self { kind: SpaceKind::Matrix { n }, symmetric, storage: Storage::Matrix { n, values } })
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn len(&self) -> usize {
        match &self.storage {
            Storage::Vectors { dim, coords } => {
                if *dim == 0 {
                    0
                } else {
                    coords.len() / dim
                }
            }
            Storage::Strings(s) => s.len(),
            Storage::Matrix { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate dimension for vector spaces.
    pub fn dim(&self) -> Option<usize> {
        match &self.storage {
            Storage::Vectors { dim, .. } => Some(*dim),
            _ => None,
        }
    }

    pub fn vector(&self, id: PointId) -> Option<&[f64]> {
        match &self.storage {
            Storage::Vectors { dim, coords } => {
                let i = id as usize * dim;
                coords.get(i..i + dim)
            }
            _ => None,
        }
    }

    pub fn text(&self, id: PointId) -> Option<String> {
        match &self.storage {
            Storage::Strings(s) => s.get(id as usize).map(|c| c.iter().collect()),
            _ => None,
        }
    }

    /// Raw matrix entries (row-major) for explicit-matrix spaces.
    pub fn matrix_values(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Matrix { values, .. } => Some(values),
            _ => None,
        }
    }

    /// Owned copy of a stored point.
    pub fn point(&self, id: PointId) -> Result<Point> {
        self.check(id)?;
        Ok(match &self.storage {
            Storage::Vectors { .. } => Point::Vector(self.vector(id).unwrap().to_vec()),
            Storage::Strings(s) => Point::Text(s[id as usize].iter().collect()),
            Storage::Matrix { .. } => Point::Index(id),
        })
    }

    fn check(&self, id: PointId) -> Result<()> {
        if (id as usize) < self.len() {
            Ok(())
        } else {
            Err(Error::Index(id as usize))
        }
    }

    fn vec_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            SpaceKind::Minkowski { p, .. } => minkowski(a, b, p),
            _ => minkowski(a, b, f64::INFINITY),
        }
    }

    /// δ(u, v) between stored points, uncounted.
    pub fn delta(&self, u: PointId, v: PointId) -> f64 {
        match &self.storage {
            Storage::Vectors { dim, coords } => {
                let (u, v) = (u as usize * dim, v as usize * dim);
                self.vec_dist(&coords[u..u + dim], &coords[v..v + dim])
            }
            Storage::Strings(s) => levenshtein(&s[u as usize], &s[v as usize]) as f64,
            Storage::Matrix { n, values } => values[u as usize * n + v as usize],
        }
    }

    /// δ(a, b) for arbitrary references, uncounted.
    pub fn delta_ref(&self, a: PointRef, b: PointRef) -> Result<f64> {
        use PointRef::*;
        match (a, b) {
            (Node(u), Node(v)) => {
                self.check(u)?;
                self.check(v)?;
                Ok(self.delta(u, v))
            }
            (Axis(i), Axis(j)) => {
                self.axis_ok(i)?;
                self.axis_ok(j)?;
                if i == j {
                    Ok(0.0)
                } else {
                    Err(Error::Capability("pseudo-foci are not mutually comparable".into()))
                }
            }
            (Axis(i), other) | (other, Axis(i)) => {
                self.axis_ok(i)?;
                let x = self.resolve_vector(other)?;
                Ok(x[i as usize])
            }
            (a, b) => match &self.storage {
                Storage::Vectors { .. } => {
                    let x = self.resolve_vector(a)?;
                    let y = self.resolve_vector(b)?;
                    Ok(self.vec_dist(&x, &y))
                }
                Storage::Strings(_) => {
                    let x = self.resolve_text(a)?;
                    let y = self.resolve_text(b)?;
                    Ok(levenshtein(&x, &y) as f64)
                }
                Storage::Matrix { .. } => {
                    let u = self.resolve_index(a)?;
                    let v = self.resolve_index(b)?;
                    Ok(self.delta(u, v))
                }
            },
        }
    }

    /// δ(q, v) for an external point and a stored point, uncounted.
    pub fn delta_from(&self, q: &Point, v: PointId) -> Result<f64> {
        match (q, &self.storage) {
            (Point::Vector(x), Storage::Vectors { dim, coords }) => {
                if x.len() != *dim {
                    return Err(Error::Dimension { expected: *dim, got: x.len() });
                }
                self.check(v)?;
                let i = v as usize * dim;
                Ok(self.vec_dist(x, &coords[i..i + dim]))
            }
            _ => self.delta_ref(PointRef::External(q), PointRef::Node(v)),
        }
    }

    /// δ(v, q) for a stored point and an external point, uncounted.
    pub fn delta_to(&self, v: PointId, q: &Point) -> Result<f64> {
        if self.symmetric {
            self.delta_from(q, v)
        } else {
            self.delta_ref(PointRef::Node(v), PointRef::External(q))
        }
    }

    fn axis_ok(&self, i: u32) -> Result<()> {
        match self.kind {
            SpaceKind::Projection { dim } if (i as usize) < dim => Ok(()),
            SpaceKind::Projection { .. } => Err(Error::Index(i as usize)),
            _ => Err(Error::Capability("pseudo-foci exist only in projection spaces".into())),
        }
    }

    fn resolve_vector(&self, r: PointRef) -> Result<Vec<f64>> {
        let dim = self.dim().ok_or_else(|| Error::Capability("not a vector space".into()))?;
        let v = match r {
            PointRef::Node(id) => {
                self.check(id)?;
                self.vector(id).unwrap().to_vec()
            }
            PointRef::External(Point::Vector(v)) => v.clone(),
            PointRef::External(_) => return Err(Error::Capability("expected a vector point".into())),
            PointRef::Axis(_) => return Err(Error::Capability("axis is not a vector".into())),
        };
        if v.len() != dim {
            return Err(Error::Dimension { expected: dim, got: v.len() });
        }
        Ok(v)
    }

    fn resolve_text(&self, r: PointRef) -> Result<Vec<char>> {
        match (r, &self.storage) {
            (PointRef::Node(id), Storage::Strings(s)) => {
                self.check(id)?;
                Ok(s[id as usize].clone())
            }
            (PointRef::External(Point::Text(t)), _) => Ok(t.chars().collect()),
            _ => Err(Error::Capability("expected a string point".into())),
        }
    }

    fn resolve_index(&self, r: PointRef) -> Result<PointId> {
        let id = match r {
            PointRef::Node(id) | PointRef::External(&Point::Index(id)) => id,
            _ => return Err(Error::Capability("expected a matrix index".into())),
        };
        self.check(id)?;
        Ok(id)
    }
}

fn flatten(rows: &[Vec<f64>]) -> Result<(usize, Vec<f64>)> {
    let dim = rows.first().map_or(0, Vec::len);
    if !rows.is_empty() && dim == 0 {
        return Err(Error::Param("zero-dimensional points".into()));
    }
    let mut coords = Vec::with_capacity(rows.len() * dim);
    for r in rows {
        if r.len() != dim {
            return Err(Error::Dimension { expected: dim, got: r.len() });
        }
        coords.extend_from_slice(r);
    }
    Ok((dim, coords))
}

pub fn minkowski(a: &[f64], b: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    } else if p == 1.0 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    } else if p.is_infinite() {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    } else {
        a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let next = (diag + usize::from(ca != cb)).min(row[j] + 1).min(row[j + 1] + 1);
            diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[b.len()]
}

/// Counts comparisons made through it. One per query session.
#[derive(Debug)]
pub struct Session<'a> {
    pub space: &'a ComparisonSpace,
    count: u64,
}

impl<'a> Session<'a> {
    pub fn new(space: &'a ComparisonSpace) -> Self {
        Self { space, count: 0 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn compare(&mut self, u: PointRef, v: PointRef) -> Result<f64> {
        let d = self.space.delta_ref(u, v)?;
        self.count += 1;
        Ok(d)
    }

    pub fn compare_nodes(&mut self, u: PointId, v: PointId) -> f64 {
        self.count += 1;
        self.space.delta(u, v)
    }

    pub fn compare_from(&mut self, q: &Point, v: PointId) -> Result<f64> {
        let d = self.space.delta_from(q, v)?;
        self.count += 1;
        Ok(d)
    }

    pub fn compare_to(&mut self, v: PointId, q: &Point) -> Result<f64> {
        let d = self.space.delta_to(v, q)?;
        self.count += 1;
        Ok(d)
    }
}

/// Forward radients x_i = δ(p_i, u), plus backward y_i = δ(u, p_i) for
/// asymmetric spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub forward: Vec<f64>,
    pub backward: Option<Vec<f64>>,
}

pub fn feature_map(space: &ComparisonSpace, foci: &[Focus], u: PointRef) -> Result<FeatureVector> {
    if foci.is_empty() {
        return Err(Error::Param("feature map needs at least one focus".into()));
    }
    let forward = foci.iter().map(|&f| space.delta_ref(f.into(), u)).collect::<Result<Vec<_>>>()?;
    let backward = if space.is_symmetric() {
        None
    } else {
        Some(foci.iter().map(|&f| space.delta_ref(u, f.into())).collect::<Result<Vec<_>>>()?)
    };
    Ok(FeatureVector { forward, backward })
}

/// Linear ambit used as a query: {u : Σ c_j δ(u, q_j) ≤ s}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbitQuery {
    pub foci: Vec<Point>,
    pub weights: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Query {
    /// {u : δ(u, center) ≤ radius}; with `knn` the radius is the initial cover radius.
    Ball { center: Point, radius: f64, knn: Option<usize> },
    Ambit(AmbitQuery),
    Set(Vec<PointId>),
}

impl Query {
    pub fn ball(center: Point, radius: f64) -> Self {
        Query::Ball { center, radius, knn: None }
    }

    pub fn knn(center: Point, k: usize) -> Self {
        Query::Ball { center, radius: f64::INFINITY, knn: Some(k) }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Query::Ball { radius, knn, .. } => {
                if !(*radius >= 0.0) {
                    return Err(Error::Param(format!("negative ball radius {radius}")));
                }
                if *knn == Some(0) {
                    return Err(Error::Param("k must be positive".into()));
                }
            }
            Query::Ambit(a) => {
                if a.weights.is_empty() || a.weights.len() != a.foci.len() {
                    return Err(Error::Param("ambit query needs one weight per focus".into()));
                }
            }
            Query::Set(_) => {}
        }
        Ok(())
    }

    /// Exact membership of a stored point.
    pub fn contains(&self, session: &mut Session, v: PointId) -> Result<bool> {
        Ok(match self {
            Query::Ball { center, radius, .. } => session.compare_to(v, center)? <= *radius,
            Query::Ambit(a) => {
                let mut acc = 0.0;
                for (q, c) in a.foci.iter().zip(&a.weights) {
                    acc += c * session.compare_to(v, q)?;
                }
                acc <= a.radius
            }
            Query::Set(s) => s.contains(&v),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub queries: Vec<Query>,
    pub atomistic: bool,
}

impl Workload {
    /// Adds the singleton query {v} for every listed node and marks the workload atomistic.
    pub fn with_singletons(mut self, nodes: &[PointId]) -> Self {
        for &v in nodes {
            if !self.queries.iter().any(|q| matches!(q, Query::Set(s) if s == &[v])) {
                self.queries.push(Query::Set(vec![v]));
            }
        }
        self.atomistic = true;
        self
    }

    /// Checks that every ground-set member of every query has its singleton query.
    pub fn is_atomistic(&self, space: &ComparisonSpace, ground: &[PointId]) -> Result<bool> {
        let mut s = Session::new(space);
        for q in &self.queries {
            for &v in ground {
                if q.contains(&mut s, v)?
                    && !self.queries.iter().any(|p| matches!(p, Query::Set(x) if x == &[v]))
                {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Explicit-matrix metric from the focus-selection hardness argument over
/// `V ∪ {q}`: 2 on graph edges, 3 on non-edges, 3+ε to the query point `q`
/// (index `node_count`).
pub fn build_hardness_gadget(node_count: usize, edges: &[(usize, usize)], epsilon: f64) -> Result<ComparisonSpace> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Param(format!("epsilon {epsilon} outside (0, 1]")));
    }
    let n = node_count + 1;
    let mut m = vec![3.0; n * n];
    for i in 0..n {
        m[i * n + i] = 0.0;
        if i < node_count {
            m[i * n + node_count] = 3.0 + epsilon;
            m[node_count * n + i] = 3.0 + epsilon;
        }
    }
    for &(u, v) in edges {
        if u >= node_count || v >= node_count {
            return Err(Error::Index(u.max(v)));
        }
        if u == v {
            return Err(Error::Param("self-loop in a simple graph".into()));
        }
        m[u * n + v] = 2.0;
        m[v * n + u] = 2.0;
    }
    let space = ComparisonSpace::matrix(n, m, true)?;
    if let Some((a, b, c)) = triangle_violation(&space) {
        return Err(Error::Structure(format!("gadget violates the triangle inequality at ({a},{b},{c})")));
    }
    Ok(space)
}

/// Exhaustive triangle-inequality check over stored points; returns a violating triple.
pub fn triangle_violation(space: &ComparisonSpace) -> Option<(PointId, PointId, PointId)> {
    let n = space.len() as PointId;
    for u in 0..n {
        for v in 0..n {
            for w in 0..n {
                if space.delta(u, w) > space.delta(u, v) + space.delta(v, w) + TOL {
                    return Some((u, v, w));
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pythagorean() {
        let s = ComparisonSpace::euclidean(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(s.delta(0, 1), 5.0);
        assert_eq!(s.delta(1, 1), 0.0);
    }

    #[test]
    fn session_counts() {
        let s = ComparisonSpace::euclidean(&[vec![0.0], vec![1.0]]).unwrap();
        let mut sess = Session::new(&s);
        sess.compare(PointRef::Node(0), PointRef::Node(1)).unwrap();
        sess.compare_from(&Point::Vector(vec![0.5]), 1).unwrap();
        assert_eq!(sess.count(), 2);
        assert!(sess.compare(PointRef::Node(0), PointRef::Node(7)).is_err());
    }

    #[test]
    fn features() {
        let s = ComparisonSpace::euclidean(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let f = feature_map(&s, &[Focus::Node(0), Focus::Node(1)], PointRef::Node(1)).unwrap();
        assert_eq!(f.forward, vec![1.0, 0.0]);
        assert!(f.backward.is_none());
        let f = feature_map(&s, &[Focus::Node(1)], PointRef::Node(1)).unwrap();
        assert_eq!(f.forward, vec![0.0]);
    }

    #[test]
    fn projection_features() {
        let s = ComparisonSpace::projection(&[vec![0.3, 0.7]]).unwrap();
        let f = feature_map(&s, &[Focus::Axis(0), Focus::Axis(1)], PointRef::Node(0)).unwrap();
        assert_eq!(f.forward, vec![0.3, 0.7]);
        assert!(s.delta_ref(PointRef::Axis(0), PointRef::Axis(1)).is_err());
    }

    #[test]
    fn strings() {
        let s = ComparisonSpace::levenshtein(&["kitten", "sitting", ""]);
        assert_eq!(s.delta(0, 1), 3.0);
        assert_eq!(s.delta(0, 2), 6.0);
        assert_eq!(s.delta_from(&Point::Text("kitten".into()), 0).unwrap(), 0.0);
    }

    #[test]
    fn gadget_cases() {
        let k3 = build_hardness_gadget(3, &[(0, 1), (1, 2), (0, 2)], 0.5).unwrap();
        for u in 0..4 {
            for v in 0..4 {
                if u != v {
                    assert!([2.0, 3.5].contains(&k3.delta(u, v)));
                }
            }
        }
        let e = build_hardness_gadget(2, &[(0, 1)], 1.0).unwrap();
        assert_eq!(e.delta(0, 1), 2.0);
        assert_eq!(e.delta(0, 2), 4.0);
        assert_eq!(e.delta(1, 2), 4.0);
        let empty = build_hardness_gadget(2, &[], 0.3).unwrap();
        assert_eq!(empty.delta(0, 1), 3.0);
        assert!(build_hardness_gadget(2, &[], 0.0).is_err());
        assert!(build_hardness_gadget(2, &[], 1.5).is_err());
    }

    #[test]
    fn matrix_validation() {
        assert!(ComparisonSpace::matrix(2, vec![0.0, 1.0, 2.0, 0.0], true).is_err());
        assert!(ComparisonSpace::matrix(2, vec![0.0, 1.0, 2.0, 0.0], false).is_ok());
        assert!(ComparisonSpace::matrix(2, vec![1.0, 1.0, 1.0, 0.0], false).is_err());
        assert!(ComparisonSpace::matrix(2, vec![0.0, -1.0, 1.0, 0.0], false).is_err());
    }

    #[test]
    fn query_membership() {
        let s = ComparisonSpace::euclidean(&[vec![0.0], vec![2.0]]).unwrap();
        let mut sess = Session::new(&s);
        let q = Query::ball(Point::Vector(vec![0.5]), 0.5);
        assert!(q.contains(&mut sess, 0).unwrap());
        assert!(!q.contains(&mut sess, 1).unwrap());
        let a = Query::Ambit(AmbitQuery {
            foci: vec![Point::Vector(vec![0.0]), Point::Vector(vec![2.0])],
            weights: vec![1.0, 1.0],
            radius: 2.0,
        });
        assert!(a.contains(&mut sess, 0).unwrap());
        assert!(a.contains(&mut sess, 1).unwrap());
        assert!(Query::ball(Point::Vector(vec![0.0]), -1.0).validate().is_err());
    }
}

//! Ambits: preimages of balls under a remoteness map of focal comparisons.
//!
//! An ambit `B[p, r; f]` holds every `u` with `f(φ(u)) ≤ r`, where `φ(u)` is
//! the vector of comparisons between the foci `p` and `u`. Linear maps may
//! have several rows; each row is one facet with its own radius.

use serde::{Deserialize, Serialize};

use crate::comparison::{feature_map, ComparisonSpace, Focus, PointRef, TOL};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RemotenessMap {
    /// `rows × cols` matrix A in row-major order.
    Linear { rows: usize, cols: usize, a: Vec<f64> },
    /// `Σ aᵢ xᵢ^α` with α in (0, 1].
    Power { weights: Vec<f64>, alpha: f64 },
    /// `Σ (1 − bᵢ e^{−aᵢ xᵢ})`. `offset` must be set when some bᵢ ≠ 1.
    Metaball { a: Vec<f64>, b: Vec<f64>, offset: bool },
    /// `x₁x₂ / (x₁ + x₂ − x₁x₂)` on [0,1]², inputs clamped to [0,1].
    Hamacher,
}

impl RemotenessMap {
    pub fn linear(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(Error::Param("linear map needs at least one nonempty row".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Dimension { expected: cols, got: r.len() });
        }
        Ok(RemotenessMap::Linear { rows: rows.len(), cols, a: rows.concat() })
    }

    pub fn power(weights: Vec<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Param(format!("power exponent {alpha} outside (0, 1]")));
        }
        if weights.is_empty() {
            return Err(Error::Param("power map needs weights".into()));
        }
        Ok(RemotenessMap::Power { weights, alpha })
    }

    pub fn metaball(a: Vec<f64>, b: Option<Vec<f64>>) -> Result<Self> {
        if a.is_empty() || a.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Param("metaball rates must be positive".into()));
        }
        let offset = b.is_some();
        let b = b.unwrap_or_else(|| vec![1.0; a.len()]);
        if b.len() != a.len() || b.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Param("metaball offsets must be positive, one per focus".into()));
        }
        Ok(RemotenessMap::Metaball { a, b, offset })
    }

    /// Number of foci the map expects.
    pub fn arity(&self) -> usize {
        match self {
            RemotenessMap::Linear { cols, .. } => *cols,
            RemotenessMap::Power { weights, .. } => weights.len(),
            RemotenessMap::Metaball { a, .. } => a.len(),
            RemotenessMap::Hamacher => 2,
        }
    }

    /// Number of remoteness components (radii).
    pub fn outputs(&self) -> usize {
        match self {
            RemotenessMap::Linear { rows, .. } => *rows,
            _ => 1,
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        match self {
            RemotenessMap::Linear { cols, a, .. } => &a[i * cols..(i + 1) * cols],
            _ => panic!("row() on a non-linear map"),
        }
    }

    /// Nondecreasing in every radient.
    pub fn is_monotone(&self) -> bool {
        match self {
            RemotenessMap::Linear { a, .. } => a.iter().all(|&x| x >= 0.0),
            RemotenessMap::Power { weights, .. } => weights.iter().all(|&x| x >= 0.0),
            RemotenessMap::Metaball { .. } | RemotenessMap::Hamacher => true,
        }
    }

    /// Evaluates one scalar component without allocation.
    pub fn eval_component(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            RemotenessMap::Linear { .. } => dot(self.row(i), x),
            RemotenessMap::Power { weights, alpha } => {
                weights.iter().zip(x).map(|(w, xi)| w * xi.powf(*alpha)).sum()
            }
            RemotenessMap::Metaball { a, b, .. } => {
                a.iter().zip(b).zip(x).map(|((ai, bi), xi)| 1.0 - bi * (-ai * xi).exp()).sum()
            }
            RemotenessMap::Hamacher => hamacher(x[0], x[1]),
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn hamacher(x1: f64, x2: f64) -> f64 {
    let (x1, x2) = (x1.clamp(0.0, 1.0), x2.clamp(0.0, 1.0));
    let den = x1 + x2 - x1 * x2;
    if den == 0.0 {
        0.0
    } else {
        x1 * x2 / den
    }
}

pub fn remoteness(map: &RemotenessMap, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != map.arity() {
        return Err(Error::Dimension { expected: map.arity(), got: x.len() });
    }
    Ok((0..map.outputs()).map(|i| map.eval_component(i, x)).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    #[default]
    Forward,
    Backward,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ambit {
    pub foci: Vec<Focus>,
    pub map: RemotenessMap,
    pub radii: Vec<f64>,
    #[serde(default)]
    pub orientation: Orientation,
}

impl Ambit {
    pub fn new(foci: Vec<Focus>, map: RemotenessMap, radii: Vec<f64>) -> Result<Self> {
        if foci.len() != map.arity() {
            return Err(Error::Dimension { expected: map.arity(), got: foci.len() });
        }
        if radii.len() != map.outputs() {
            return Err(Error::Dimension { expected: map.outputs(), got: radii.len() });
        }
        Ok(Self { foci, map, radii, orientation: Orientation::Forward })
    }

    pub fn linear(foci: Vec<Focus>, rows: Vec<Vec<f64>>, radii: Vec<f64>) -> Result<Self> {
        Self::new(foci, RemotenessMap::linear(rows)?, radii)
    }

    /// Exact membership for a feature vector.
    pub fn contains_features(&self, x: &[f64]) -> bool {
        (0..self.radii.len()).all(|i| self.map.eval_component(i, x) <= self.radii[i])
    }

    /// Membership with the permissive tolerance.
    pub fn contains_features_tol(&self, x: &[f64]) -> bool {
        (0..self.radii.len()).all(|i| self.map.eval_component(i, x) <= self.radii[i] + TOL)
    }

    pub fn membership(&self, space: &ComparisonSpace, u: PointRef) -> Result<bool> {
        let f = feature_map(space, &self.foci, u)?;
        let x = match self.orientation {
            Orientation::Forward => f.forward,
            Orientation::Backward => f.backward.unwrap_or(f.forward),
        };
        Ok(self.contains_features(&x))
    }

    /// Conservative overlap test against the ball `{u : δ(u, q) ≤ s}`, given
    /// `z_i = δ(p_i, q)`.
    pub fn overlaps_ball(&self, z: &[f64], s: f64, symmetric: bool) -> Result<bool> {
        if z.len() != self.foci.len() {
            return Err(Error::Dimension { expected: self.foci.len(), got: z.len() });
        }
        if !symmetric && self.orientation == Orientation::Backward {
            return Err(Error::Capability("backward regions against ball queries in an asymmetric space".into()));
        }
        match &self.map {
            RemotenessMap::Linear { .. } => {
                if !symmetric && !self.map.is_monotone() {
                    return Err(Error::Capability(
                        "negative coefficients need a symmetric comparison for ball checks".into(),
                    ));
                }
                Ok(overlap_ball(&self.map, &self.radii, z, s))
            }
            RemotenessMap::Power { .. } | RemotenessMap::Metaball { .. } => {
                overlap_monotone(&self.map, self.radii[0], z, s)
            }
            RemotenessMap::Hamacher => overlap_corner(&self.map, &self.radii, z, s),
        }
    }

    /// Lower bound on δ(u, q) over members u; 0 when no useful bound is known.
    pub fn ball_lower_bound(&self, z: &[f64]) -> f64 {
        match &self.map {
            RemotenessMap::Linear { rows, .. } => {
                let mut lb: f64 = 0.0;
                for i in 0..*rows {
                    let a = self.map.row(i);
                    let n = l1(a);
                    let excess = dot(a, z) - self.radii[i];
                    if n > 0.0 {
                        lb = lb.max(excess / n);
                    } else if excess > 0.0 {
                        return f64::INFINITY;
                    }
                }
                lb
            }
            RemotenessMap::Power { weights, alpha } => {
                let total: f64 = weights.iter().sum();
                let excess = self.map.eval_component(0, z) - self.radii[0];
                if excess <= 0.0 || total <= 0.0 {
                    0.0
                } else {
                    (excess / total).powf(1.0 / alpha)
                }
            }
            _ => 0.0,
        }
    }
}

/// `r + ‖a‖₁ s ≥ a·z` for every row of a linear map, compared at unit ℓ₁
/// weight so that rescaling a row does not move the tolerance.
pub fn overlap_ball(map: &RemotenessMap, radii: &[f64], z: &[f64], s: f64) -> bool {
    (0..radii.len()).all(|i| {
        let a = map.row(i);
        let n = l1(a);
        if n == 0.0 {
            return radii[i] >= -TOL;
        }
        radii[i] / n + s >= dot(a, z) / n - TOL
    })
}

/// Ambit-query check `r + s ≥ a Z cᵀ` per row, after rescaling to unit
/// ℓ₁ weights. `z[i][j] = δ(p_i, q_j)`. One of a, c must be nonnegative; in
/// asymmetric spaces both must be.
pub fn overlap_linear(
    map: &RemotenessMap,
    radii: &[f64],
    c: &[f64],
    s: f64,
    z: &[Vec<f64>],
    symmetric: bool,
) -> Result<bool> {
    let RemotenessMap::Linear { rows, cols, .. } = map else {
        return Err(Error::Capability("overlap_linear needs a linear region".into()));
    };
    if z.len() != *cols || z.iter().any(|r| r.len() != c.len()) {
        return Err(Error::Dimension { expected: *cols, got: z.len() });
    }
    let cn = l1(c);
    let c_nonneg = c.iter().all(|&x| x >= 0.0);
    if cn == 0.0 {
        // Q is everything or nothing.
        return Ok(s >= -TOL);
    }
    for i in 0..*rows {
        let a = map.row(i);
        let an = l1(a);
        if an == 0.0 {
            if radii[i] < 0.0 {
                return Ok(false);
            }
            continue;
        }
        let a_nonneg = a.iter().all(|&x| x >= 0.0);
        let ok_sign = if symmetric { a_nonneg || c_nonneg } else { a_nonneg && c_nonneg };
        if !ok_sign {
            return Err(Error::Capability("overlap check needs nonnegative weights on one side".into()));
        }
        let mut azc = 0.0;
        for (k, ak) in a.iter().enumerate() {
            azc += ak * dot(&z[k], c);
        }
        if radii[i] / an + s / cn < azc / (an * cn) - TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `r + f(s,…,s) ≥ f(z)` for nondecreasing subadditive maps.
pub fn overlap_monotone(map: &RemotenessMap, r: f64, z: &[f64], s: f64) -> Result<bool> {
    match map {
        RemotenessMap::Power { weights, .. } if weights.iter().all(|&w| w >= 0.0) => {}
        RemotenessMap::Metaball { b, .. } if b.iter().all(|&x| x <= 1.0) => {}
        _ => return Err(Error::Capability("map is not nondecreasing and subadditive".into())),
    }
    let sv = vec![s; z.len()];
    Ok(r + map.eval_component(0, &sv) >= map.eval_component(0, z) - TOL)
}

/// `r − f(s,…,s) ≥ f(z)` for a caller-supplied nonincreasing superadditive map.
pub fn overlap_nonincreasing<F: Fn(&[f64]) -> f64>(f: F, r: f64, z: &[f64], s: f64) -> bool {
    let sv = vec![s; z.len()];
    r - f(&sv) >= f(z) - TOL
}

/// `f(max(z − s, 0)) ≤ r`: the nearest corner of the feature-space box around z.
pub fn overlap_corner(map: &RemotenessMap, radii: &[f64], z: &[f64], s: f64) -> Result<bool> {
    if !map.is_monotone() {
        return Err(Error::Capability("corner check needs a nondecreasing map".into()));
    }
    let corner: Vec<f64> = z.iter().map(|&zi| (zi - s).max(0.0)).collect();
    Ok((0..radii.len()).all(|i| map.eval_component(i, &corner) <= radii[i] + TOL))
}

/// Classic region shapes expressed as linear ambits.
#[derive(Clone, Debug, PartialEq)]
pub enum Table1 {
    Ball(f64),
    ComplementBall(f64),
    Sphere(f64),
    Shell { inner: f64, outer: f64 },
    /// Generalized hyperplane: closer to the first focus than the second.
    Plane,
    Ellipse(f64),
    Hyperbola(f64),
    /// Cell of focus `cell` among `m` foci.
    Voronoi { m: usize, cell: usize },
    /// One shell per pivot.
    Cut { inner: Vec<f64>, outer: Vec<f64> },
}

pub fn table1_region(kind: Table1, foci: Vec<Focus>) -> Result<Ambit> {
    let (rows, radii): (Vec<Vec<f64>>, Vec<f64>) = match kind {
        Table1::Ball(r) => (vec![vec![1.0]], vec![r]),
        Table1::ComplementBall(r) => (vec![vec![-1.0]], vec![-r]),
        Table1::Sphere(r) => (vec![vec![1.0], vec![-1.0]], vec![r, -r]),
        Table1::Shell { inner, outer } => {
            if inner > outer {
                return Err(Error::Param("shell inner radius exceeds outer".into()));
            }
            (vec![vec![1.0], vec![-1.0]], vec![outer, -inner])
        }
        Table1::Plane => (vec![vec![1.0, -1.0]], vec![0.0]),
        Table1::Ellipse(r) => (vec![vec![1.0, 1.0]], vec![r]),
        Table1::Hyperbola(r) => (vec![vec![1.0, -1.0]], vec![r]),
        Table1::Voronoi { m, cell } => {
            if m < 2 || cell >= m {
                return Err(Error::Param(format!("voronoi cell {cell} of {m}")));
            }
            let rows = (0..m)
                .filter(|&j| j != cell)
                .map(|j| {
                    let mut row = vec![0.0; m];
                    row[cell] = 1.0;
                    row[j] = -1.0;
                    row
                })
                .collect::<Vec<_>>();
            let n = rows.len();
            (rows, vec![0.0; n])
        }
        Table1::Cut { inner, outer } => {
            let m = inner.len();
            if m == 0 || outer.len() != m {
                return Err(Error::Param("cut region needs one inner and outer radius per pivot".into()));
            }
            let mut rows = Vec::new();
            for i in 0..m {
                let mut row = vec![0.0; m];
                row[i] = 1.0;
                rows.push(row);
            }
            for i in 0..m {
                let mut row = vec![0.0; m];
                row[i] = -1.0;
                rows.push(row);
            }
            let radii = outer.iter().copied().chain(inner.iter().map(|x| -x)).collect();
            (rows, radii)
        }
    };
    Ambit::linear(foci, rows, radii)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(i: u32) -> Focus {
        Focus::Node(i)
    }

    #[test]
    fn remoteness_examples() {
        let lin = RemotenessMap::linear(vec![vec![1.0]]).unwrap();
        assert_eq!(remoteness(&lin, &[2.5]).unwrap(), vec![2.5]);
        let p = RemotenessMap::power(vec![1.0, 1.0], 1.0).unwrap();
        assert_eq!(remoteness(&p, &[2.0, 3.0]).unwrap(), vec![5.0]);
        let m = RemotenessMap::metaball(vec![1.0], None).unwrap();
        assert_eq!(remoteness(&m, &[0.0]).unwrap(), vec![0.0]);
        assert_eq!(hamacher(0.0, 0.0), 0.0);
        assert_eq!(hamacher(1.0, 0.5), 0.5);
        assert!(remoteness(&p, &[1.0]).is_err());
        assert!(RemotenessMap::power(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn ball_check_examples() {
        let e = table1_region(Table1::Ellipse(4.0), vec![n(0), n(1)]).unwrap();
        assert!(overlap_ball(&e.map, &e.radii, &[3.0, 3.0], 1.0));
        let h = table1_region(Table1::Hyperbola(0.0), vec![n(0), n(1)]).unwrap();
        assert!(!overlap_ball(&h.map, &h.radii, &[5.0, 1.0], 1.0));
    }

    #[test]
    fn monotone_and_corner_examples() {
        let p = RemotenessMap::power(vec![1.0], 0.5).unwrap();
        assert!(overlap_monotone(&p, 2.0, &[9.0], 1.0).unwrap());
        assert!(!overlap_monotone(&p, 2.0, &[9.0], 0.9).unwrap());
        let lin = RemotenessMap::linear(vec![vec![1.0, -1.0]]).unwrap();
        assert!(overlap_monotone(&lin, 0.0, &[1.0, 1.0], 1.0).is_err());
        assert!(overlap_corner(&lin, &[0.0], &[1.0, 1.0], 1.0).is_err());
        let hm = RemotenessMap::Hamacher;
        assert!(overlap_corner(&hm, &[0.0], &[0.5, 0.5], 0.5).unwrap());
        let off = RemotenessMap::metaball(vec![1.0], Some(vec![2.0])).unwrap();
        assert!(overlap_monotone(&off, 0.0, &[0.0], 0.0).is_err());
    }

    #[test]
    fn table1_rows() {
        let b = table1_region(Table1::Ball(2.0), vec![n(0)]).unwrap();
        assert_eq!(b.map, RemotenessMap::Linear { rows: 1, cols: 1, a: vec![1.0] });
        assert_eq!(b.radii, vec![2.0]);
        let s = table1_region(Table1::Sphere(2.0), vec![n(0)]).unwrap();
        assert_eq!(s.map, RemotenessMap::Linear { rows: 2, cols: 1, a: vec![1.0, -1.0] });
        assert_eq!(s.radii, vec![2.0, -2.0]);
        let v = table1_region(Table1::Voronoi { m: 3, cell: 0 }, vec![n(0), n(1), n(2)]).unwrap();
        assert_eq!(v.map, RemotenessMap::Linear { rows: 2, cols: 3, a: vec![1.0, -1.0, 0.0, 1.0, 0.0, -1.0] });
        assert_eq!(v.radii, vec![0.0, 0.0]);
        let c = table1_region(Table1::Cut { inner: vec![1.0, 2.0], outer: vec![3.0, 4.0] }, vec![n(0), n(1)]).unwrap();
        assert_eq!(c.radii, vec![3.0, 4.0, -1.0, -2.0]);
        assert_eq!(c.map.outputs(), 4);
        assert!(table1_region(Table1::Ball(1.0), vec![n(0), n(1)]).is_err());
        assert!(table1_region(Table1::Voronoi { m: 1, cell: 0 }, vec![n(0)]).is_err());
    }

    #[test]
    fn linear_query_reduces_to_ball() {
        let b = table1_region(Table1::Ball(1.0), vec![n(0)]).unwrap();
        for (z, s, expect) in [(2.0, 1.0, true), (2.0, 0.9, false), (0.5, 0.0, true)] {
            let got = overlap_linear(&b.map, &b.radii, &[1.0], s, &[vec![z]], true).unwrap();
            assert_eq!(got, expect);
        }
        let mixed = RemotenessMap::linear(vec![vec![1.0, -1.0]]).unwrap();
        let z = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(overlap_linear(&mixed, &[0.0], &[1.0, -1.0], 0.0, &z, true).is_err());
        assert!(overlap_linear(&mixed, &[0.0], &[1.0, 1.0], 0.0, &z, false).is_err());
        assert!(overlap_linear(&mixed, &[0.0], &[1.0, 1.0], 0.0, &z, true).is_ok());
    }

    #[test]
    fn lower_bounds() {
        let b = table1_region(Table1::Ball(1.0), vec![n(0)]).unwrap();
        assert_eq!(b.ball_lower_bound(&[3.0]), 2.0);
        assert_eq!(b.ball_lower_bound(&[0.5]), 0.0);
        let s = table1_region(Table1::Sphere(2.0), vec![n(0)]).unwrap();
        assert_eq!(s.ball_lower_bound(&[0.5]), 1.5);
        let p = Ambit::new(vec![n(0)], RemotenessMap::power(vec![1.0], 0.5).unwrap(), vec![1.0]).unwrap();
        assert!((p.ball_lower_bound(&[9.0]) - 4.0).abs() < 1e-12);
    }
}

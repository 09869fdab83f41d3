//! Region shaping and focus selection: a small dense simplex solver and the
//! linear programs built on it.
//!
//! Feature data is column-oriented: `x[j]` is the m-vector of focal
//! distances of responsibility j.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ambit::{dot, Ambit};
use crate::comparison::{ComparisonSpace, Focus, Point, PointId, PointRef};
use crate::error::{Error, Result};

/// ℓ′ at or below this is degenerate.
pub const DEGENERATE_TOL: f64 = 1e-9;
const PIVOT_EPS: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// Maximize `objective · x` subject to `rows[i] · x (sense) rhs[i]`;
/// variable j is nonnegative unless `free[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    pub free: Vec<bool>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self { objective, rows: Vec::new(), senses: Vec::new(), rhs: Vec::new(), free: vec![false; n] }
    }

    pub fn constrain(&mut self, row: Vec<f64>, sense: Sense, rhs: f64) {
        self.rows.push(row);
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.free.len() != n || self.senses.len() != self.rows.len() || self.rhs.len() != self.rows.len() {
            return Err(Error::Param("inconsistent LP dimensions".into()));
        }
        for r in &self.rows {
            if r.len() != n {
                return Err(Error::Dimension { expected: n, got: r.len() });
            }
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.objective) || !finite(&self.rhs) || !self.rows.iter().all(|r| finite(r)) {
            return Err(Error::Param("LP coefficients must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Unbounded,
    Infeasible,
}

struct Tableau {
    t: Vec<Vec<f64>>,
    /// Reduced-cost row; last entry is the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let row = self.t[r].clone();
        for (i, other) in self.t.iter_mut().enumerate() {
            let f = other[c];
            if i != r && f != 0.0 {
                for (o, &v) in other.iter_mut().zip(&row) {
                    *o -= f * v;
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (o, &v) in self.obj.iter_mut().zip(&row) {
                *o -= f * v;
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule over columns below `limit`. Ok(false) means unbounded.
    fn run(&mut self, limit: usize) -> Result<bool> {
        let max_pivots = 50 * (self.t.len() + self.cols) + 1000;
        for _ in 0..max_pivots {
            let Some(c) = (0..limit).find(|&j| self.obj[j] < -PIVOT_EPS) else {
                return Ok(true);
            };
            let rhs = self.cols;
            let mut best: Option<(f64, usize, usize)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[c] > PIVOT_EPS {
                    let ratio = row[rhs] / row[c];
                    let better = match best {
                        None => true,
                        Some((b, _, bb)) => ratio < b - 1e-12 || (ratio <= b + 1e-12 && self.basis[i] < bb),
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            match best {
                Some((_, r, _)) => self.pivot(r, c),
                None => return Ok(false),
            }
        }
        Err(Error::Solver("simplex pivot limit reached".into()))
    }
}

/// Two-phase primal simplex on a dense tableau with Bland's rule.
pub fn solve_lp(p: &LpProblem) -> Result<LpOutcome> {
    p.validate()?;
    let n = p.objective.len();
    // Column map: each original variable, plus a negative part for free ones.
    let mut neg_col = vec![None; n];
    let mut cols = n;
    for j in 0..n {
        if p.free[j] {
            neg_col[j] = Some(cols);
            cols += 1;
        }
    }
    let structural = cols;
    let m = p.rows.len();
    let slack_count = p.senses.iter().filter(|s| **s != Sense::Eq).count();
    let mut art_rows = Vec::new();
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(m);
    for i in 0..m {
        let mut r = vec![0.0; structural];
        for j in 0..n {
            r[j] = p.rows[i][j];
            if let Some(k) = neg_col[j] {
                r[k] = -p.rows[i][j];
            }
        }
        let (mut sense, mut b) = (p.senses[i], p.rhs[i]);
        if b < 0.0 {
            r.iter_mut().for_each(|v| *v = -*v);
            b = -b;
            sense = match sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
        if sense != Sense::Le {
            art_rows.push(i);
        }
        rows.push((r, sense, b));
    }
    let total = structural + slack_count + art_rows.len();
    let mut tab = Tableau { t: Vec::with_capacity(m), obj: vec![0.0; total + 1], basis: vec![0; m], cols: total };
    let (mut slack, mut art) = (structural, structural + slack_count);
    for (i, (r, sense, b)) in rows.into_iter().enumerate() {
        let mut row = vec![0.0; total + 1];
        row[..structural].copy_from_slice(&r);
        row[total] = b;
        match sense {
            Sense::Le => {
                row[slack] = 1.0;
                tab.basis[i] = slack;
                slack += 1;
            }
            Sense::Ge => {
                row[slack] = -1.0;
                slack += 1;
                row[art] = 1.0;
                tab.basis[i] = art;
                art += 1;
            }
            Sense::Eq => {
                row[art] = 1.0;
                tab.basis[i] = art;
                art += 1;
            }
        }
        tab.t.push(row);
    }
    let first_art = structural + slack_count;

    if !art_rows.is_empty() {
        // Phase 1: maximize −Σ artificials.
        for j in first_art..total {
            tab.obj[j] = 1.0;
        }
        for i in 0..m {
            if tab.basis[i] >= first_art {
                for j in 0..=total {
                    tab.obj[j] -= tab.t[i][j];
                }
            }
        }
        tab.run(total)?;
        let scale = 1.0 + p.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if -tab.obj[total] > 1e-9 * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive artificials out of the basis or drop redundant rows.
        let mut i = 0;
        while i < tab.t.len() {
            if tab.basis[i] >= first_art {
                match (0..first_art).find(|&j| tab.t[i][j].abs() > 1e-9) {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.t.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    // Phase 2.
    tab.obj.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..n {
        tab.obj[j] = -p.objective[j];
        if let Some(k) = neg_col[j] {
            tab.obj[k] = p.objective[j];
        }
    }
    for i in 0..tab.t.len() {
        let f = tab.obj[tab.basis[i]];
        if f != 0.0 {
            let row = tab.t[i].clone();
            for (o, v) in tab.obj.iter_mut().zip(row) {
                *o -= f * v;
            }
        }
    }
    if !tab.run(first_art)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut values = vec![0.0; total];
    for (i, &b) in tab.basis.iter().enumerate() {
        values[b] = tab.t[i][total];
    }
    let x: Vec<f64> = (0..n).map(|j| values[j] - neg_col[j].map_or(0.0, |k| values[k])).collect();
    let value = dot(&p.objective, &x);
    Ok(LpOutcome::Optimal { x, value })
}

/// Responsibility features and the mean training-query feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    pub x: Vec<Vec<f64>>,
    pub zhat: Vec<f64>,
}

impl TrainingSet {
    pub fn new(x: Vec<Vec<f64>>, zhat: Vec<f64>) -> Result<Self> {
        let m = zhat.len();
        if m == 0 {
            return Err(Error::Param("at least one focus is required".into()));
        }
        for col in &x {
            if col.len() != m {
                return Err(Error::Dimension { expected: m, got: col.len() });
            }
        }
        if !x.iter().flatten().chain(&zhat).all(|v| v.is_finite()) {
            return Err(Error::Param("training features must be finite".into()));
        }
        Ok(Self { x, zhat })
    }

    /// ẑ as the mean of the query feature vectors.
    pub fn from_queries(x: Vec<Vec<f64>>, queries: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = queries.first() else {
            return Err(Error::Param("no training queries".into()));
        };
        let mut zhat = vec![0.0; first.len()];
        for q in queries {
            if q.len() != zhat.len() {
                return Err(Error::Dimension { expected: zhat.len(), got: q.len() });
            }
            for (z, v) in zhat.iter_mut().zip(q) {
                *z += v;
            }
        }
        zhat.iter_mut().for_each(|z| *z /= queries.len() as f64);
        Self::new(x, zhat)
    }

    pub fn foci(&self) -> usize {
        self.zhat.len()
    }
}

/// Focal distances of stored points: column j is (δ(p_i, u_j))_i.
pub fn features(space: &ComparisonSpace, foci: &[PointId], points: &[PointId]) -> Vec<Vec<f64>> {
    points.iter().map(|&u| foci.iter().map(|&p| space.delta(p, u)).collect()).collect()
}

/// Focal distances of external query points.
pub fn query_features(space: &ComparisonSpace, foci: &[PointId], queries: &[Point]) -> Result<Vec<Vec<f64>>> {
    queries
        .iter()
        .map(|q| foci.iter().map(|&p| space.delta_ref(PointRef::Node(p), PointRef::External(q))).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FacetSolution {
    pub a: Vec<f64>,
    pub r: f64,
    /// ℓ′_opt.
    pub ell: f64,
    pub degenerate: bool,
}

/// Single facet maximizing the expected filtering bound E[az − r] with
/// ‖a‖₁ = 1, via u, v ≥ 0 and free r.
pub fn optimal_facet(t: &TrainingSet) -> Result<FacetSolution> {
    let m = t.foci();
    let mut obj = Vec::with_capacity(2 * m + 1);
    obj.extend(t.zhat.iter().copied());
    obj.extend(t.zhat.iter().map(|z| -z));
    obj.push(-1.0);
    let mut lp = LpProblem::new(obj);
    lp.free[2 * m] = true;
    let mut norm = vec![1.0; 2 * m + 1];
    norm[2 * m] = 0.0;
    lp.constrain(norm, Sense::Eq, 1.0);
    for col in &t.x {
        let mut row = Vec::with_capacity(2 * m + 1);
        row.extend(col.iter().copied());
        row.extend(col.iter().map(|v| -v));
        row.push(-1.0);
        lp.constrain(row, Sense::Le, 0.0);
    }
    let (x, value) = match solve_lp(&lp)? {
        LpOutcome::Optimal { x, value } => (x, value),
        // Columns are finite and u = v, r = 0 is feasible, so neither can happen.
        other => return Err(Error::Solver(format!("facet LP returned {other:?}"))),
    };
    let a: Vec<f64> = (0..m).map(|i| x[i] - x[m + i]).collect();
    // Tight radius so that every responsibility is contained exactly.
    let r = t.x.iter().map(|c| dot(&a, c)).fold(f64::NEG_INFINITY, f64::max);
    let r = if r.is_finite() { r } else { x[2 * m] };
    let ell = value.max(0.0);
    Ok(FacetSolution { a, r, ell, degenerate: ell <= DEGENERATE_TOL })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinRadius {
    /// Direct form: min r s.t. a·1 = 1, aX ≤ r, a ≥ 0.
    pub a: Vec<f64>,
    pub r: f64,
    /// Packing form: max â·1 s.t. âX ≤ 1, â ≥ 0, rescaled to a = â/â·1.
    pub packing_a: Vec<f64>,
    pub packing_r: f64,
}

pub fn min_radius(t: &TrainingSet) -> Result<MinRadius> {
    let m = t.foci();
    let mut obj = vec![0.0; m + 1];
    obj[m] = -1.0;
    let mut lp = LpProblem::new(obj);
    let mut sum = vec![1.0; m + 1];
    sum[m] = 0.0;
    lp.constrain(sum, Sense::Eq, 1.0);
    for col in &t.x {
        let mut row = col.clone();
        row.push(-1.0);
        lp.constrain(row, Sense::Le, 0.0);
    }
    let (a, r) = match solve_lp(&lp)? {
        LpOutcome::Optimal { x, .. } => (x[..m].to_vec(), x[m]),
        other => return Err(Error::Solver(format!("radius LP returned {other:?}"))),
    };

    let mut lp = LpProblem::new(vec![1.0; m]);
    for col in &t.x {
        lp.constrain(col.clone(), Sense::Le, 1.0);
    }
    let (packing_a, packing_r) = match solve_lp(&lp)? {
        LpOutcome::Optimal { x, value } if value > 0.0 => (x.iter().map(|v| v / value).collect(), 1.0 / value),
        LpOutcome::Optimal { .. } => return Err(Error::Solver("packing LP has zero optimum".into())),
        // A focus at distance zero from every responsibility: radius zero.
        LpOutcome::Unbounded => {
            let i = (0..m).find(|&i| t.x.iter().all(|c| c[i] == 0.0)).unwrap_or(0);
            let mut a = vec![0.0; m];
            a[i] = 1.0;
            (a, 0.0)
        }
        LpOutcome::Infeasible => return Err(Error::Solver("packing LP infeasible".into())),
    };
    Ok(MinRadius { a, r, packing_a, packing_r })
}

/// Minimal linear ambit on the given foci containing every column of `x`:
/// the convex hull of the feature vectors, for m ≤ 3.
///
/// Inputs spanning a lower-dimensional affine subspace get a pair of opposite
/// facets per normal direction of that subspace.
pub fn hull_ambit(x: &[Vec<f64>], foci: Vec<Focus>) -> Result<Ambit> {
    let m = foci.len();
    if m == 0 || m > 3 {
        return Err(Error::Capability(format!("exact hulls need 1 to 3 foci, got {m}; use cluster_facets")));
    }
    if x.is_empty() {
        return Err(Error::Param("hull of an empty point set".into()));
    }
    for c in x {
        if c.len() != m {
            return Err(Error::Dimension { expected: m, got: c.len() });
        }
    }
    let normals = hull_normals(x, m);
    let radii = normals.iter().map(|n| x.iter().map(|c| dot(n, c)).fold(f64::NEG_INFINITY, f64::max)).collect();
    Ambit::linear(foci, normals, radii)
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Gram-Schmidt: adds `v` to `basis` if it has a component outside it.
fn extend_basis(basis: &mut Vec<Vec<f64>>, mut v: Vec<f64>, tol: f64) -> bool {
    for b in basis.iter() {
        let d = dot(&v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
    }
    if normalize(&mut v) > tol {
        basis.push(v);
        true
    } else {
        false
    }
}

/// Outward facet normals of the hull of `x`, unit length.
fn hull_normals(x: &[Vec<f64>], m: usize) -> Vec<Vec<f64>> {
    let p0 = &x[0];
    let scale = x.iter().flatten().fold(1.0f64, |a, b| a.max(b.abs()));
    let tol = 1e-9 * scale;
    let mut affine = Vec::new();
    for c in x {
        if affine.len() == m {
            break;
        }
        extend_basis(&mut affine, sub(c, p0), tol);
    }
    let d = affine.len();
    let mut normals = Vec::new();
    let mut complement = affine.clone();
    for i in 0..m {
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        if extend_basis(&mut complement, e, 1e-6) {
            let w = complement.last().unwrap().clone();
            normals.push(w.iter().map(|v| -v).collect());
            normals.push(w);
        }
    }
    match d {
        0 => {}
        1 => {
            let b = &affine[0];
            normals.push(b.clone());
            normals.push(b.iter().map(|v| -v).collect());
        }
        2 => {
            let pts: Vec<(f64, f64)> = x
                .iter()
                .map(|c| {
                    let v = sub(c, p0);
                    (dot(&v, &affine[0]), dot(&v, &affine[1]))
                })
                .collect();
            let hull = monotone_chain(&pts);
            for i in 0..hull.len() {
                let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
                let (nx, ny) = (b.1 - a.1, a.0 - b.0);
                let mut n: Vec<f64> = (0..m).map(|k| nx * affine[0][k] + ny * affine[1][k]).collect();
                normalize(&mut n);
                normals.push(n);
            }
        }
        _ => {
            // m = 3, full-dimensional: every supporting plane through three points.
            let mut cand: Vec<Vec<f64>> = Vec::new();
            let n = x.len();
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        let u = sub(&x[j], &x[i]);
                        let v = sub(&x[k], &x[i]);
                        let mut c = vec![u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
                        if normalize(&mut c) <= tol * tol {
                            continue;
                        }
                        let h = dot(&c, &x[i]);
                        let side = |s: f64| x.iter().all(|p| s * (dot(&c, p) - h) <= tol);
                        for s in [1.0, -1.0] {
                            if side(s) {
                                let w: Vec<f64> = c.iter().map(|v| s * v).collect();
                                if !cand.iter().any(|o| o.iter().zip(&w).all(|(a, b)| (a - b).abs() < 1e-9)) {
                                    cand.push(w);
                                }
                            }
                        }
                    }
                }
            }
            normals.extend(cand);
        }
    }
    normals
}

/// Counter-clockwise hull vertices without collinear points.
pub fn monotone_chain(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut p = pts.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut h: Vec<(f64, f64)> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = h.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while h.len() >= start + 2 && cross(h[h.len() - 2], h[h.len() - 1], q) <= 0.0 {
                h.pop();
            }
            h.push(q);
        }
        h.pop();
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FacetMode {
    /// Maximize the expected bound against each centroid.
    Lp25,
    /// Minimize the radius; ignores the queries.
    MinRadius,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FacetSet {
    pub rows: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub solutions: Vec<FacetSolution>,
}

impl FacetSet {
    pub fn into_ambit(self, foci: Vec<Focus>) -> Result<Ambit> {
        Ambit::linear(foci, self.rows, self.radii)
    }
}

/// k-means++ seeding then Lloyd iterations; returns centroids and labels.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let d2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    let mut near: Vec<f64> = points.iter().map(|p| d2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = near.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut t = rng.random::<f64>() * total;
        let mut pick = points.len() - 1;
        for (i, &w) in near.iter().enumerate() {
            if t < w {
                pick = i;
                break;
            }
            t -= w;
        }
        centers.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            near[i] = near[i].min(d2(p, &centers[centers.len() - 1]));
        }
    }
    let mut labels = vec![0; points.len()];
    for _ in 0..100 {
        for (i, p) in points.iter().enumerate() {
            labels[i] = (0..centers.len())
                .min_by(|&a, &b| d2(p, &centers[a]).total_cmp(&d2(p, &centers[b])))
                .unwrap();
        }
        let mut moved = 0.0f64;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            if members.is_empty() {
                continue;
            }
            let mut mean = vec![0.0; center.len()];
            for p in &members {
                mean.iter_mut().zip(p.iter()).for_each(|(m, v)| *m += v);
            }
            mean.iter_mut().for_each(|m| *m /= members.len() as f64);
            moved = moved.max(d2(&mean, center).sqrt());
            *center = mean;
        }
        if moved < 1e-6 {
            break;
        }
    }
    (centers, labels)
}

/// One facet per k-means cluster of the query feature vectors.
pub fn cluster_facets(
    x: &[Vec<f64>],
    query_features: &[Vec<f64>],
    k: usize,
    mode: FacetMode,
    seed: u64,
) -> Result<FacetSet> {
    if k == 0 {
        return Err(Error::Param("k must be positive".into()));
    }
    let mut out = FacetSet { rows: Vec::new(), radii: Vec::new(), solutions: Vec::new() };
    let m = x.first().map(|c| c.len()).or_else(|| query_features.first().map(|q| q.len()));
    let Some(m) = m else {
        return Err(Error::Param("no features".into()));
    };
    if mode == FacetMode::MinRadius {
        // Every centroid yields the same facet.
        let t = TrainingSet::new(x.to_vec(), vec![0.0; m])?;
        let mr = min_radius(&t)?;
        let r = x.iter().map(|c| dot(&mr.a, c)).fold(0.0, f64::max);
        out.solutions.push(FacetSolution { a: mr.a.clone(), r, ell: 0.0, degenerate: false });
        out.rows.push(mr.a);
        out.radii.push(r);
        return Ok(out);
    }
    if query_features.is_empty() {
        return Err(Error::Param("lp25 facets need query features".into()));
    }
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for q in query_features {
        if !distinct.contains(&q) {
            distinct.push(q);
        }
    }
    let k = if k > distinct.len() {
        log::warn!("reducing k from {k} to {} distinct query features", distinct.len());
        distinct.len()
    } else {
        k
    };
    let (centers, _) = kmeans(query_features, k, seed);
    for z in centers {
        let s = optimal_facet(&TrainingSet::new(x.to_vec(), z)?)?;
        out.rows.push(s.a.clone());
        out.radii.push(s.r);
        out.solutions.push(s);
    }
    Ok(out)
}

/// The n-th smallest distance from `u` to the other points.
fn n_radius(space: &ComparisonSpace, u: PointId, points: &[PointId], n: usize) -> f64 {
    let mut d: Vec<f64> = points.iter().filter(|&&v| v != u).map(|&v| space.delta(u, v)).collect();
    if n == 0 || d.is_empty() {
        return 0.0;
    }
    let k = n.min(d.len()) - 1;
    *d.select_nth_unstable_by(k, f64::total_cmp).1
}

#[derive(Clone, Debug, PartialEq)]
pub struct FocusChoice {
    pub foci: Vec<PointId>,
    pub responsibilities: Vec<PointId>,
    pub a: Vec<f64>,
    pub r: f64,
}

/// Picks m foci from `points` with radius at most twice the best possible.
pub fn two_approx_foci(space: &ComparisonSpace, points: &[PointId], m: usize) -> Result<FocusChoice> {
    if m == 0 || m > points.len() {
        return Err(Error::Param(format!("need 1 ≤ m ≤ {}, got {m}", points.len())));
    }
    let n = points.len() - m;
    // Among any m+1 points the smallest n-radius is no greater than m others'.
    let mut p1 = points[0];
    let mut best = f64::INFINITY;
    for &u in &points[..(m + 1).min(points.len())] {
        let r = n_radius(space, u, points, n);
        if r < best {
            best = r;
            p1 = u;
        }
    }
    let mut rest: Vec<PointId> = points.iter().copied().filter(|&u| u != p1).collect();
    rest.sort_by(|&u, &v| space.delta(p1, v).total_cmp(&space.delta(p1, u)).then(u.cmp(&v)));
    let mut foci = vec![p1];
    foci.extend_from_slice(&rest[..m - 1]);
    let responsibilities = rest[m - 1..].to_vec();
    radius_for(space, foci, responsibilities)
}

/// Minimum radius for fixed foci.
pub fn radius_for(space: &ComparisonSpace, foci: Vec<PointId>, responsibilities: Vec<PointId>) -> Result<FocusChoice> {
    if responsibilities.is_empty() {
        let mut a = vec![0.0; foci.len()];
        a[0] = 1.0;
        return Ok(FocusChoice { foci, responsibilities, a, r: 0.0 });
    }
    let x = features(space, &foci, &responsibilities);
    let mr = min_radius(&TrainingSet::new(x, vec![0.0; foci.len()])?)?;
    Ok(FocusChoice { foci, responsibilities, a: mr.a, r: mr.r.max(0.0) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Runoff {
    pub foci: Vec<PointId>,
    pub first: FacetSolution,
    pub second: FacetSolution,
}

/// Two rounds: all candidates as foci, then the m with largest |aᵢ|.
pub fn runoff_foci(
    space: &ComparisonSpace,
    candidates: &[PointId],
    responsibilities: &[PointId],
    queries: &[Point],
    m: usize,
) -> Result<Runoff> {
    if m == 0 || candidates.len() < m {
        return Err(Error::Param(format!("need 1 ≤ m ≤ {} candidates, got {m}", candidates.len())));
    }
    let solve = |foci: &[PointId], resp: &[PointId]| -> Result<FacetSolution> {
        let x = features(space, foci, resp);
        optimal_facet(&TrainingSet::from_queries(x, &query_features(space, foci, queries)?)?)
    };
    let first = solve(candidates, responsibilities)?;
    if first.degenerate {
        log::warn!("first runoff round is degenerate");
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| first.a[j].abs().total_cmp(&first.a[i].abs()).then(i.cmp(&j)));
    let mut picked: Vec<usize> = order[..m].to_vec();
    picked.sort_unstable();
    let foci: Vec<PointId> = picked.iter().map(|&i| candidates[i]).collect();
    let resp: Vec<PointId> = responsibilities.iter().copied().filter(|u| !foci.contains(u)).collect();
    let second = solve(&foci, &resp)?;
    Ok(Runoff { foci, first, second })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaResult {
    pub alpha: f64,
    /// (ℓ′_opt(α))^{1/α}, comparable across α.
    pub bound: f64,
    /// The 20-point grid that seeded the search.
    pub grid: Vec<(f64, f64)>,
}

/// Bound achievable with power remoteness x ↦ x^α.
pub fn alpha_objective(x: &[Vec<f64>], queries: &[Vec<f64>], alpha: f64) -> Result<f64> {
    let pow = |v: &Vec<f64>| v.iter().map(|d| d.powf(alpha)).collect::<Vec<_>>();
    let t = TrainingSet::from_queries(x.iter().map(pow).collect(), &queries.iter().map(pow).collect::<Vec<_>>())?;
    let s = optimal_facet(&t)?;
    Ok(if s.degenerate { 0.0 } else { s.ell.powf(1.0 / alpha) })
}

/// Grid over [0.05, 1], then golden-section search in the best bracket.
pub fn alpha_search(x: &[Vec<f64>], queries: &[Vec<f64>]) -> Result<AlphaResult> {
    const LO: f64 = 0.05;
    let steps = 20;
    let grid: Vec<(f64, f64)> = (0..steps)
        .map(|i| {
            let a = LO + (1.0 - LO) * i as f64 / (steps - 1) as f64;
            alpha_objective(x, queries, a).map(|v| (a, v))
        })
        .collect::<Result<_>>()?;
    let bi = (0..steps).fold(steps - 1, |b, i| if grid[i].1 > grid[b].1 { i } else { b });
    let mut best = grid[bi];
    if best.1 <= 0.0 {
        return Ok(AlphaResult { alpha: 1.0, bound: 0.0, grid });
    }
    let (mut a, mut b) = (grid[bi.saturating_sub(1)].0, grid[(bi + 1).min(steps - 1)].0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = alpha_objective(x, queries, c)?;
    let mut fd = alpha_objective(x, queries, d)?;
    while b - a > 1e-3 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = alpha_objective(x, queries, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = alpha_objective(x, queries, d)?;
        }
        for (p, v) in [(c, fc), (d, fd)] {
            if v > best.1 {
                best = (p, v);
            }
        }
    }
    Ok(AlphaResult { alpha: best.0, bound: best.1, grid })
}

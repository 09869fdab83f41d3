//! Versioned JSON index files. Floats are written in shortest round-trip
//! form, so loading reproduces every parameter bit for bit.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::comparison::{ComparisonSpace, PointId, SpaceKind};
use crate::error::{Error, Result};
use crate::sprawl::{Edge, IndexKind, Region, ResponsibilityAssignment, Sprawl};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpaceDescriptor {
    /// `p` absent means L-inf.
    Minkowski {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<f64>,
        points: Vec<Vec<f64>>,
    },
    Projection { points: Vec<Vec<f64>> },
    Matrix { n: usize, symmetric: bool, values: Vec<f64> },
    Levenshtein { strings: Vec<String> },
}

impl SpaceDescriptor {
    pub fn of(space: &ComparisonSpace) -> Self {
        let n = space.len() as PointId;
        let rows = || (0..n).map(|i| space.vector(i).unwrap().to_vec()).collect();
        match space.kind() {
            SpaceKind::Minkowski { p, .. } => {
                SpaceDescriptor::Minkowski { p: p.is_finite().then_some(*p), points: rows() }
            }
            SpaceKind::Projection { .. } => SpaceDescriptor::Projection { points: rows() },
            SpaceKind::Matrix { n } => SpaceDescriptor::Matrix {
                n: *n,
                symmetric: space.is_symmetric(),
                values: space.matrix_values().unwrap().to_vec(),
            },
            SpaceKind::Levenshtein => SpaceDescriptor::Levenshtein { strings: (0..n).map(|i| space.text(i).unwrap()).collect() },
        }
    }

    pub fn build(&self) -> Result<ComparisonSpace> {
        match self {
            SpaceDescriptor::Minkowski { p, points } => ComparisonSpace::minkowski(p.unwrap_or(f64::INFINITY), points),
            SpaceDescriptor::Projection { points } => ComparisonSpace::projection(points),
            SpaceDescriptor::Matrix { n, symmetric, values } => ComparisonSpace::matrix(*n, values.clone(), *symmetric),
            SpaceDescriptor::Levenshtein { strings } => Ok(ComparisonSpace::levenshtein(strings)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeBlock {
    pub sources: Vec<PointId>,
    pub target: PointId,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub positive: Vec<Region>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub negative: Vec<Region>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub lazy: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexFile {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<IndexKind>,
    pub space: SpaceDescriptor,
    pub nodes: Vec<PointId>,
    pub roots: Vec<PointId>,
    pub edges: Vec<EdgeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub responsibility: Option<ResponsibilityAssignment>,
}

impl IndexFile {
    pub fn from_sprawl(s: &Sprawl, kind: Option<IndexKind>, res: Option<&ResponsibilityAssignment>) -> Self {
        let edges = s
            .edges
            .iter()
            .map(|e| EdgeBlock {
                sources: e.sources.to_vec(),
                target: e.target,
                positive: e.positive.to_vec(),
                negative: e.negative.to_vec(),
                lazy: e.lazy,
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION,
            kind,
            space: SpaceDescriptor::of(&s.space),
            nodes: s.nodes.clone(),
            roots: s.roots.clone(),
            edges,
            responsibility: res.cloned(),
        }
    }

    pub fn to_sprawl(&self) -> Result<Sprawl> {
        let space = Arc::new(self.space.build()?);
        let mut s = Sprawl::new(space, self.nodes.clone());
        s.roots = self.roots.clone();
        s.edges = self
            .edges
            .iter()
            .map(|b| {
                let mut e = Edge::new(&b.sources, b.target, b.positive.iter().cloned().collect(), b.negative.iter().cloned().collect());
                e.lazy = b.lazy;
                e
            })
            .collect();
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        let v = serde_json::to_value(self)?;
        // serde_json writes non-finite floats as null, which would not load back.
        if has_null(&v) {
            return Err(Error::Param("index contains non-finite numbers".into()));
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: IndexFile = serde_json::from_str(text)?;
        if f.format_version != FORMAT_VERSION {
            return Err(Error::Param(format!("unsupported index format version {}", f.format_version)));
        }
        Ok(f)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn has_null(v: &serde_json::Value) -> bool {
    use serde_json::Value;
    match v {
        Value::Null => true,
        Value::Array(a) => a.iter().any(has_null),
        Value::Object(o) => o.values().any(has_null),
        _ => false,
    }
}

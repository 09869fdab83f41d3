//! Dataset loading, point parsing and index-kind selection shared by the
//! subcommands.

use std::path::Path;

use clap::ValueEnum;
use rand::Rng;
use sprawl::comparison::dataset::{parse_matrix, parse_row, parse_strings, parse_vectors};
use sprawl::comparison::{ComparisonSpace, Point, SpaceKind};
use sprawl::sprawl::IndexKind;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpaceArg {
    Euclidean,
    Manhattan,
    Chebyshev,
    Projection,
    Levenshtein,
    Matrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    BallTree,
    Aesa,
    Laesa,
    PmTree,
    SortedIntervalTree,
}

pub fn index_kind(kind: KindArg, pivots: usize, arity: usize) -> IndexKind {
    match kind {
        KindArg::BallTree => IndexKind::BallTree,
        KindArg::Aesa => IndexKind::Aesa,
        KindArg::Laesa => IndexKind::Laesa { pivots },
        KindArg::PmTree => IndexKind::PmTree { arity, pivots },
        KindArg::SortedIntervalTree => IndexKind::SortedIntervalTree,
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn write(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Reads a dataset file into a comparison space. Parse errors carry the
/// file name and line number.
pub fn load_space(path: &Path, space: SpaceArg, p: Option<f64>) -> Result<ComparisonSpace, CliError> {
    let text = read(path)?;
    let at = |e: sprawl::Error| match e {
        sprawl::Error::Parse { line, msg } => CliError::Input(format!("{}:{line}: {msg}", path.display())),
        other => other.into(),
    };
    let s = match space {
        SpaceArg::Levenshtein => {
            let words = parse_strings(&text);
            if words.is_empty() {
                return Err(CliError::Input(format!("{}: empty dataset", path.display())));
            }
            ComparisonSpace::levenshtein(&words)
        }
        SpaceArg::Matrix => {
            let (n, values) = parse_matrix(&text).map_err(at)?;
            if n == 0 {
                return Err(CliError::Input(format!("{}: empty dataset", path.display())));
            }
            let symmetric = (0..n).all(|i| (0..n).all(|j| values[i * n + j] == values[j * n + i]));
            ComparisonSpace::matrix(n, values, symmetric)?
        }
        _ => {
            let rows = parse_vectors(&text).map_err(at)?;
            if rows.is_empty() {
                return Err(CliError::Input(format!("{}: empty dataset", path.display())));
            }
            match space {
                SpaceArg::Euclidean => ComparisonSpace::minkowski(p.unwrap_or(2.0), &rows)?,
                SpaceArg::Manhattan => ComparisonSpace::minkowski(1.0, &rows)?,
                SpaceArg::Chebyshev => ComparisonSpace::minkowski(f64::INFINITY, &rows)?,
                _ => ComparisonSpace::projection(&rows)?,
            }
        }
    };
    Ok(s)
}

/// A query center written in the space's own terms: coordinates for vector
/// spaces, a string for edit distance, an element index for matrices.
pub fn parse_point(space: &ComparisonSpace, text: &str) -> Result<Point, CliError> {
    match space.kind() {
        SpaceKind::Minkowski { dim, .. } | SpaceKind::Projection { dim } => {
            let v = parse_row(text, 1).map_err(|e| CliError::Usage(format!("bad point {text:?}: {e}")))?;
            if v.len() != *dim {
                return Err(CliError::Usage(format!("point {text:?} has {} coordinates, the space has {dim}", v.len())));
            }
            Ok(Point::Vector(v))
        }
        SpaceKind::Levenshtein => Ok(Point::Text(text.to_string())),
        SpaceKind::Matrix { n } => {
            let i: u32 = text.trim().parse().map_err(|_| CliError::Usage(format!("bad element index {text:?}")))?;
            if i as usize >= *n {
                return Err(CliError::Usage(format!("element {i} outside 0..{n}")));
            }
            Ok(Point::Index(i))
        }
    }
}

pub fn parse_list(text: &str) -> Result<Vec<f64>, CliError> {
    parse_row(text, 1).map_err(|e| CliError::Usage(format!("bad number list {text:?}: {e}")))
}

/// Rows separated by `;`, entries by `,`.
pub fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>, CliError> {
    text.split(';').map(parse_list).collect()
}

pub fn parse_ids(text: &str) -> Result<Vec<u32>, CliError> {
    text.split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|_| CliError::Usage(format!("bad point id {t:?}"))))
        .collect()
}

/// Per-axis bounding box of a vector space's stored points.
pub fn bounding_box(space: &ComparisonSpace) -> Option<(Vec<f64>, Vec<f64>)> {
    let dim = space.dim()?;
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for i in 0..space.len() as u32 {
        for (k, &x) in space.vector(i)?.iter().enumerate() {
            lo[k] = lo[k].min(x);
            hi[k] = hi[k].max(x);
        }
    }
    Some((lo, hi))
}

/// Shortest round-trip form, so reports reproduce stored values exactly.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Query centers from a file, one per line, in the same format as the
/// dataset of `space`.
pub fn load_points(space: &ComparisonSpace, path: &Path) -> Result<Vec<Point>, CliError> {
    let text = read(path)?;
    let at = |e: sprawl::Error| match e {
        sprawl::Error::Parse { line, msg } => CliError::Input(format!("{}:{line}: {msg}", path.display())),
        other => other.into(),
    };
    match space.kind() {
        SpaceKind::Levenshtein => Ok(parse_strings(&text).into_iter().map(Point::Text).collect()),
        SpaceKind::Matrix { .. } => text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| parse_point(space, l))
            .collect(),
        SpaceKind::Minkowski { dim, .. } | SpaceKind::Projection { dim } => {
            let rows = parse_vectors(&text).map_err(at)?;
            if let Some(r) = rows.iter().find(|r| r.len() != *dim) {
                return Err(sprawl::Error::Dimension { expected: *dim, got: r.len() }.into());
            }
            Ok(rows.into_iter().map(Point::Vector).collect())
        }
    }
}

/// Random query centers: uniform in the data's bounding box for vector
/// spaces, uniformly chosen stored elements otherwise.
pub fn random_points<R: Rng>(space: &ComparisonSpace, count: usize, rng: &mut R) -> Result<Vec<Point>, CliError> {
    if space.is_empty() {
        return Err(CliError::Input("empty dataset".into()));
    }
    match bounding_box(space) {
        Some((lo, hi)) => Ok((0..count)
            .map(|_| Point::Vector(lo.iter().zip(&hi).map(|(&a, &b)| a + (b - a) * rng.random::<f64>()).collect()))
            .collect()),
        None => (0..count)
            .map(|_| Ok(space.point(rng.random_range(0..space.len() as u32))?))
            .collect(),
    }
}

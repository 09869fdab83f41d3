//! SVG boundaries of 2-D ambits by marching squares.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{ArgGroup, Args};
use sprawl::ambit::{Ambit, RemotenessMap};
use sprawl::comparison::{feature_map, ComparisonSpace, Focus, Point, PointRef, SpaceKind};

use crate::{bench, io, CliError};

const SIZE: f64 = 512.0;

#[derive(Args)]
#[command(group(ArgGroup::new("map").args(["linear", "power", "metaball", "hamacher"])))]
pub struct PlotArgs {
    /// Focus coordinates, `x,y;x,y`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "index")]
    foci: Option<String>,
    /// Linear map rows, `a,b;c,d`.
    #[arg(long, allow_hyphen_values = true)]
    linear: Option<String>,
    /// Power map weights; pair with --alpha.
    #[arg(long, allow_hyphen_values = true)]
    power: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Metaball rates.
    #[arg(long)]
    metaball: Option<String>,
    #[arg(long)]
    hamacher: bool,
    /// One radius per map output.
    #[arg(long, allow_hyphen_values = true)]
    radii: Option<String>,
    /// Saved index over a 2-D euclidean space; plots a region of one edge.
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long, requires = "index", default_value_t = 0)]
    edge: usize,
    /// Plot the edge's negative region instead of its positive one.
    #[arg(long, requires = "index")]
    negative: bool,
    /// `xmin,ymin,xmax,ymax`; defaults to a margin around the foci.
    #[arg(long, allow_hyphen_values = true)]
    bounds: Option<String>,
    /// Grid cells per side.
    #[arg(long, default_value_t = 512)]
    resolution: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn inline_region(a: &PlotArgs, foci: &str) -> Result<(ComparisonSpace, Ambit), CliError> {
    let pts = io::parse_rows(foci)?;
    if pts.iter().any(|p| p.len() != 2) {
        return Err(CliError::Usage("foci must be 2-D points".into()));
    }
    let m = pts.len();
    let space = ComparisonSpace::euclidean(&pts)?;
    let map = if let Some(rows) = &a.linear {
        RemotenessMap::linear(io::parse_rows(rows)?)?
    } else if let Some(w) = &a.power {
        RemotenessMap::power(io::parse_list(w)?, a.alpha)?
    } else if let Some(r) = &a.metaball {
        RemotenessMap::metaball(io::parse_list(r)?, None)?
    } else if a.hamacher {
        RemotenessMap::Hamacher
    } else {
        RemotenessMap::linear(vec![vec![1.0; m]])?
    };
    let radii = match &a.radii {
        Some(r) => io::parse_list(r)?,
        None => return Err(CliError::Usage("--radii is required with --foci".into())),
    };
    let ambit = Ambit::new((0..m as u32).map(Focus::Node).collect(), map, radii)?;
    Ok((space, ambit))
}

fn index_region(a: &PlotArgs, path: &std::path::Path) -> Result<(ComparisonSpace, Ambit), CliError> {
    let s = bench::load_index(path)?;
    let e = s.edges.get(a.edge).ok_or_else(|| CliError::Usage(format!("edge {} of {}", a.edge, s.edges.len())))?;
    let label = if a.negative { &e.negative } else { &e.positive };
    let region = label.first().ok_or_else(|| CliError::Usage(format!("edge {} has no such region", a.edge)))?;
    let ambit = region
        .to_ambit()
        .ok_or_else(|| CliError::Usage(format!("edge {} region {region:?} is not an ambit", a.edge)))?;
    Ok(((*s.space).clone(), ambit))
}

pub fn run(a: PlotArgs) -> Result<(), CliError> {
    let (space, ambit) = match (&a.foci, &a.index) {
        (Some(f), _) => inline_region(&a, f)?,
        (None, Some(p)) => index_region(&a, p)?,
        (None, None) => return Err(CliError::Usage("give --foci or --index".into())),
    };
    if !matches!(space.kind(), SpaceKind::Minkowski { dim: 2, p } if *p == 2.0) {
        return Err(CliError::Usage("plots need a 2-D euclidean space".into()));
    }
    if a.resolution == 0 {
        return Err(CliError::Usage("--resolution must be positive".into()));
    }
    let markers: Vec<[f64; 2]> = ambit
        .foci
        .iter()
        .filter_map(|f| match f {
            Focus::Node(i) => space.vector(*i).map(|v| [v[0], v[1]]),
            Focus::Axis(_) => None,
        })
        .collect();
    let bounds = match &a.bounds {
        Some(b) => {
            let v = io::parse_list(b)?;
            if v.len() != 4 || !(v[0] < v[2] && v[1] < v[3]) {
                return Err(CliError::Usage("--bounds wants xmin,ymin,xmax,ymax with min < max".into()));
            }
            [v[0], v[1], v[2], v[3]]
        }
        None => default_bounds(&markers),
    };
    let svg = render(&space, &ambit, &markers, bounds, a.resolution)?;
    io::write(a.output.as_deref(), &svg)
}

/// Square window around the foci with one extent of margin on each side.
fn default_bounds(markers: &[[f64; 2]]) -> [f64; 4] {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in markers {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if markers.is_empty() {
        return [-1.0, -1.0, 1.0, 1.0];
    }
    let half = ((hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0)) * 1.5;
    let c = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    [c[0] - half, c[1] - half, c[0] + half, c[1] + half]
}

/// Largest excess of a map output over its radius; the region is g ≤ 0.
fn excess(space: &ComparisonSpace, ambit: &Ambit, x: f64, y: f64) -> Result<f64, CliError> {
    let u = Point::Vector(vec![x, y]);
    let f = feature_map(space, &ambit.foci, PointRef::External(&u))?.forward;
    Ok((0..ambit.radii.len()).map(|i| ambit.map.eval_component(i, &f) - ambit.radii[i]).fold(f64::NEG_INFINITY, f64::max))
}

fn render(space: &ComparisonSpace, ambit: &Ambit, markers: &[[f64; 2]], b: [f64; 4], n: usize) -> Result<String, CliError> {
    let px = |i: usize| b[0] + (b[2] - b[0]) * i as f64 / n as f64;
    let py = |j: usize| b[1] + (b[3] - b[1]) * j as f64 / n as f64;
    let mut g = vec![0.0; (n + 1) * (n + 1)];
    for j in 0..=n {
        for i in 0..=n {
            g[j * (n + 1) + i] = excess(space, ambit, px(i), py(j))?;
        }
    }
    let at = |i: usize, j: usize| g[j * (n + 1) + i];
    // Grid units to SVG pixels, y axis pointing up.
    let sx = |x: f64| x * SIZE / n as f64;
    let sy = |y: f64| SIZE - y * SIZE / n as f64;

    let mut path = String::new();
    let mut inside = 0usize;
    for j in 0..n {
        for i in 0..n {
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            inside += usize::from(c.iter().all(|&v| v <= 0.0));
            for (p, q) in cell_segments(c) {
                let _ = write!(
                    path,
                    "M{:.2} {:.2}L{:.2} {:.2}",
                    sx(i as f64 + p[0]),
                    sy(j as f64 + p[1]),
                    sx(i as f64 + q[0]),
                    sy(j as f64 + q[1])
                );
            }
        }
    }

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="512" height="512" viewBox="0 0 512 512">"#);
    let _ = writeln!(
        svg,
        "<!-- bounds {:.4} {:.4} {:.4} {:.4}; resolution {n}; interior cells {inside} -->",
        b[0], b[1], b[2], b[3]
    );
    let _ = writeln!(svg, r##"<rect width="512" height="512" fill="#ffffff"/>"##);
    let _ = writeln!(svg, r##"<path d="{path}" fill="none" stroke="#1f4e79" stroke-width="1.5"/>"##);
    for m in markers {
        let x = (m[0] - b[0]) / (b[2] - b[0]) * SIZE;
        let y = SIZE - (m[1] - b[1]) / (b[3] - b[1]) * SIZE;
        let _ = writeln!(svg, r##"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="#c0392b"/>"##);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Boundary segments of one cell in cell-local coordinates. Corners run
/// counter-clockwise from (0,0); saddles are split by the cell-centre mean.
fn cell_segments(c: [f64; 4]) -> Vec<([f64; 2], [f64; 2])> {
    const CORNER: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let inside = |v: f64| v <= 0.0;
    let case = (0..4).fold(0, |m, k| m | (usize::from(inside(c[k])) << k));
    if case == 0 || case == 15 {
        return Vec::new();
    }
    // Crossing point on edge k (corner k to corner k+1).
    let cross = |k: usize| {
        let (a, b) = (c[k], c[(k + 1) % 4]);
        let t = if a == b { 0.5 } else { (a / (a - b)).clamp(0.0, 1.0) };
        let (p, q) = (CORNER[k], CORNER[(k + 1) % 4]);
        [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
    };
    let crossed: Vec<usize> = (0..4).filter(|&k| inside(c[k]) != inside(c[(k + 1) % 4])).collect();
    if crossed.len() == 2 {
        return vec![(cross(crossed[0]), cross(crossed[1]))];
    }
    // Saddle: all four edges crossed.
    let centre_inside = inside(c.iter().sum::<f64>() / 4.0);
    if centre_inside == inside(c[0]) {
        // Corners 1 and 3 are cut off.
        vec![(cross(0), cross(1)), (cross(2), cross(3))]
    } else {
        vec![(cross(3), cross(0)), (cross(1), cross(2))]
    }
}

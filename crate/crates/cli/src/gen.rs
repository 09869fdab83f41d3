use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sprawl::comparison::dataset::format_vectors;

use crate::{io, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    /// Independent coordinates uniform in [0, 1).
    Uniform,
    /// Gaussian blobs around uniform centers.
    Clustered,
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = GenKind::Uniform)]
    kind: GenKind,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    dims: usize,
    #[arg(long, default_value_t = 10)]
    clusters: usize,
    /// Standard deviation of each blob.
    #[arg(long, default_value_t = 0.05)]
    spread: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

pub fn run(a: GenArgs, seed: u64) -> Result<(), CliError> {
    if a.dims == 0 {
        return Err(CliError::Usage("--dims must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = match a.kind {
        GenKind::Uniform => (0..a.count).map(|_| (0..a.dims).map(|_| rng.random::<f64>()).collect()).collect(),
        GenKind::Clustered => {
            if a.clusters == 0 {
                return Err(CliError::Usage("--clusters must be positive".into()));
            }
            let noise = Normal::new(0.0, a.spread).map_err(|e| CliError::Usage(format!("--spread: {e}")))?;
            let centers: Vec<Vec<f64>> =
                (0..a.clusters).map(|_| (0..a.dims).map(|_| rng.random::<f64>()).collect()).collect();
            (0..a.count)
                .map(|_| {
                    let c = &centers[rng.random_range(0..a.clusters)];
                    c.iter().map(|&x| x + noise.sample(&mut rng)).collect()
                })
                .collect()
        }
    };
    io::write(a.output.as_deref(), &format_vectors(&rows))
}

//! Shared inputs for the benchmarks.

use synattn::rng::{self, streams, Rng};
use synattn::{Mask, MaskSpec, Matrix, TreeKind};

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut r = rng::stream(seed, streams::BENCH);
    Matrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

/// Diagonal plus each off-diagonal pair with probability `density`.
pub fn random_mask(n: usize, density: f64, seed: u64) -> Mask {
    let mut r = rng::stream(seed, streams::RANDOM_MASKS);
    Mask::from_fn(n, MaskSpec::full(TreeKind::Dependency), |i, j| {
        i == j || r.random_bool(density)
    })
}

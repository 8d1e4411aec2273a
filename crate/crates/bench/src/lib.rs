//! Fixed inputs shared by the benchmarks.

use bachflow::grid::slice_points;
use bachflow::TriBracket;

pub const SEED: u64 = 7;

/// Seeded slice points, same set on every run.
pub fn points(count: usize) -> Vec<TriBracket> {
    slice_points(count, SEED)
}

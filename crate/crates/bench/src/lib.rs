//! Shared inputs for the contraction benchmarks.

use procten::bath::{influence_tensors, memory_kernel};
use procten::{BathSpec, InfluenceTensorSet, TimeGrid};

/// Ohmic spin-boson influence tensors at `ω_c = 10`, `T = 0.01`, `δt = 0.04`.
pub fn ohmic_fixture(alpha: f64, k: usize) -> (InfluenceTensorSet, TimeGrid) {
    let grid = TimeGrid::new(0.04, k).expect("valid grid");
    let spec = BathSpec::ohmic(alpha, 10.0, 100.0).expect("valid bath");
    let kernel = memory_kernel(&grid, &spec).expect("kernel converges");
    let bset = influence_tensors(&kernel, &[0.5, -0.5]).expect("two-level coupling");
    (bset, grid)
}

#![allow(dead_code)]

use procten::bath::{influence_tensors, MemoryKernel};
use procten::tensor::{DenseTensor, C64};
use procten::InfluenceTensorSet;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const SIGMA_Z_HALF: [f64; 2] = [0.5, -0.5];

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Kernel with `|η_l|` of order `scale / (l + 1)²`, random phases.
pub fn random_kernel(rng: &mut StdRng, k: usize, scale: f64) -> MemoryKernel {
    let eta = (0..=k)
        .map(|l| {
            let m = scale / ((l + 1) * (l + 1)) as f64;
            C64::new(rng.gen_range(-m..m), rng.gen_range(-m..m))
        })
        .collect();
    MemoryKernel::new(0.1, eta).unwrap()
}

pub fn random_set(seed: u64, k: usize, scale: f64) -> InfluenceTensorSet {
    let mut r = rng(seed);
    let kern = random_kernel(&mut r, k, scale);
    influence_tensors(&kern, &SIGMA_Z_HALF).unwrap()
}

/// Largest elementwise `|a − b| / max|b|`.
pub fn max_rel_diff(a: &DenseTensor, b: &DenseTensor) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let scale = b.data().iter().fold(0.0f64, |m, z| m.max(z.norm()));
    a.data()
        .iter()
        .zip(b.data())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
        / scale
}

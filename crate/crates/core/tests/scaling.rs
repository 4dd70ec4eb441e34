mod common;

use procten::bath::{influence_tensors, memory_kernel};
use procten::network::memory_truncate;
use procten::oracle::brute_force_influence;
use procten::scaling::{
    depth_for_error, error_bound_epsilon, error_bound_profile, predicted_memory_time,
};
use procten::{BathSpec, TimeGrid};

use common::{random_kernel, rng, SIGMA_Z_HALF};

#[test]
fn bound_covers_measured_truncation_error() {
    let k = 8;
    for seed in 0..5 {
        let kernel = random_kernel(&mut rng(100 + seed), k, 0.3);
        let full = influence_tensors(&kernel, &SIGMA_Z_HALF).unwrap();
        let exact = brute_force_influence(&full, k).unwrap();
        for m in 0..=k {
            let cut = brute_force_influence(&memory_truncate(&full, m).unwrap(), k).unwrap();
            let err = exact
                .data()
                .iter()
                .zip(cut.data())
                .map(|(a, b)| ((a - b) / a).norm())
                .fold(0.0, f64::max);
            let bound = error_bound_epsilon(&kernel, 0.5, m, k).unwrap();
            assert!(
                err <= bound + 1e-14,
                "seed {seed} m {m}: error {err:e} > bound {bound:e}"
            );
        }
    }
}

#[test]
fn bound_depth_tracks_the_memory_time_estimate() {
    let (alpha, beta, dt, k, eps) = (0.7, 100.0, 1.0, 10_000, 1e-3);
    let grid = TimeGrid::new(dt, k).unwrap();
    for omega_c in [5.0, 10.0, 20.0] {
        let spec = BathSpec::ohmic(alpha, omega_c, beta).unwrap();
        let kernel = memory_kernel(&grid, &spec).unwrap();
        let m = depth_for_error(&kernel, 0.5, k, eps).unwrap();
        let t_bound = m as f64 * dt;
        let t_pred = predicted_memory_time(&spec, grid.t_max(), eps);
        let ratio = t_bound / t_pred;
        eprintln!(
            "omega_c {omega_c}: bound depth {t_bound}, estimate {t_pred:.1}, ratio {ratio:.3}"
        );
        assert!(
            (1.0 / 3.0..=3.0).contains(&ratio),
            "ratio {ratio} at omega_c {omega_c}"
        );
    }
}

#[test]
fn bound_vanishes_without_coupling() {
    let grid = TimeGrid::new(0.1, 50).unwrap();
    let kernel = memory_kernel(&grid, &BathSpec::ohmic(0.0, 5.0, 10.0).unwrap()).unwrap();
    assert!(error_bound_profile(&kernel, 0.5, 50)
        .unwrap()
        .iter()
        .all(|&e| e == 0.0));
}

mod common;

use common::*;
use procten::bath::{compound_index, influence_tensors, MemoryKernel};
use procten::network::{
    build_local_row, build_nonlocal_row, contract_local, contract_nonlocal, memory_truncate,
    read_mps, write_mps, BoundaryMps,
};
use procten::oracle::brute_force_influence;
use procten::tensor::{DenseTensor, C64};
use procten::TimeGrid;

#[test]
fn both_schemes_reproduce_brute_force() {
    for k in 1..=8 {
        let bset = random_set(100 + k as u64, k, 0.8);
        let grid = TimeGrid::new(0.1, k).unwrap();
        let exact = brute_force_influence(&bset, k).unwrap();
        let nl = contract_nonlocal(&bset, &grid, 0.0).unwrap();
        let lo = contract_local(&bset, &grid, 0.0).unwrap();
        let e_nl = max_rel_diff(&nl.to_dense().unwrap(), &exact);
        let e_lo = max_rel_diff(&lo.to_dense().unwrap(), &exact);
        assert!(e_nl < 1e-10 && e_lo < 1e-10, "k={k}: {e_nl:e} {e_lo:e}");
    }
}

#[test]
fn dense_rows_multiply_to_the_influence_functional() {
    let k = 4;
    let bset = random_set(9, k, 1.0);
    let exact = brute_force_influence(&bset, k).unwrap();
    for local in [false, true] {
        let mut prod = DenseTensor::from_fn(vec![4; k], |_| C64::new(1.0, 0.0));
        for i in 1..=k {
            let row = if local {
                build_local_row(i, k, &bset).unwrap()
            } else {
                build_nonlocal_row(i, &bset).unwrap()
            };
            let dense = row.to_dense(k).unwrap();
            for (p, x) in prod.data_mut().iter_mut().zip(dense.data()) {
                *p *= x;
            }
        }
        assert!(max_rel_diff(&prod, &exact) < 1e-13);
    }
}

#[test]
fn row_base_cases() {
    let bset = random_set(4, 3, 1.0);
    let first = build_nonlocal_row(1, &bset).unwrap();
    assert_eq!(first.legs(), vec![1]);
    let last = build_local_row(3, 3, &bset).unwrap();
    assert_eq!(last.legs(), vec![3]);
    assert_eq!(build_local_row(1, 3, &bset).unwrap().legs(), vec![1, 2, 3]);
    assert_eq!(build_nonlocal_row(3, &bset).unwrap().legs(), vec![3, 2, 1]);
    assert!(build_nonlocal_row(0, &bset).is_err());
    assert!(build_local_row(4, 3, &bset).is_err());

    // single leg: the chain is the diagonal of b_0
    let grid = TimeGrid::new(0.1, 1).unwrap();
    for f in [
        contract_local(&bset, &grid, 0.0),
        contract_nonlocal(&bset, &grid, 0.0),
    ] {
        let f = f.unwrap();
        for a in 0..4 {
            assert!((f.element(&[a]).unwrap() - bset.b[0][(a, a)]).norm() < 1e-14);
        }
    }
}

#[test]
fn decoupled_bath_stays_a_product() {
    let kern = MemoryKernel::new(0.1, vec![C64::new(0.0, 0.0); 7]).unwrap();
    let bset = influence_tensors(&kern, &SIGMA_Z_HALF).unwrap();
    let grid = TimeGrid::new(0.1, 6).unwrap();
    for f in [
        contract_local(&bset, &grid, 1e-6),
        contract_nonlocal(&bset, &grid, 1e-6),
    ] {
        let f = f.unwrap();
        assert!(f.stats.max_bond.iter().all(|&b| b == 1));
        let dense = f.to_dense().unwrap();
        assert!(dense
            .data()
            .iter()
            .all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-13));
    }
}

#[test]
fn local_prefix_is_frozen_once_finalized() {
    // rerun the local contraction one row at a time and compare snapshots
    let k = 7;
    let bset = random_set(21, k, 1.5);
    let grid = TimeGrid::new(0.1, k).unwrap();
    let full = contract_local(&bset, &grid, 1e-8).unwrap();
    let depth = bset.depth();
    let mut mps = BoundaryMps::ones(k, 4);
    for i in 1..=k {
        build_local_row(i, k, &bset)
            .unwrap()
            .apply(&mut mps)
            .unwrap();
        let reach = (i + depth).min(k);
        let mut active = mps.clone();
        active.finalized = i - 1;
        active.sites.truncate(reach);
        let tail: Vec<_> = mps.sites[reach..].to_vec();
        active.sweep_compress(1e-8).unwrap();
        let snapshot = active.sites[..i].to_vec();
        active.sites.extend(tail);
        mps = active;
        // the finalized legs never change again
        assert_eq!(snapshot, full.sites[..i].to_vec(), "leg {i}");
    }
}

#[test]
fn invariants_at_finite_cutoff() {
    let k = 8;
    let bset = random_set(5, k, 0.3);
    let grid = TimeGrid::new(0.1, k).unwrap();
    for f in [
        contract_local(&bset, &grid, 1e-6).unwrap(),
        contract_nonlocal(&bset, &grid, 1e-6).unwrap(),
    ] {
        let tol = f.tolerance().max(1e-12);
        // all-diagonal multi-indices are exactly one in the exact functional
        for pattern in 0..(1 << k) {
            let legs: Vec<usize> = (0..k)
                .map(|j| {
                    if pattern >> j & 1 == 1 {
                        compound_index(1, 1, 2)
                    } else {
                        0
                    }
                })
                .collect();
            let e = (f.element(&legs).unwrap() - 1.0).norm();
            assert!(
                e <= tol,
                "{e:e} vs {tol:e}, norm {}",
                f.to_dense().unwrap().frobenius_norm()
            );
        }
        // global s↔r swap conjugates
        let swap = |a: usize| compound_index(a / 2, a % 2, 2);
        let mut r = rng(77);
        for _ in 0..50 {
            let legs: Vec<usize> = (0..k).map(|_| rand::Rng::gen_range(&mut r, 0..4)).collect();
            let swapped: Vec<usize> = legs.iter().map(|&a| swap(a)).collect();
            let x = f.element(&legs).unwrap();
            let y = f.element(&swapped).unwrap();
            assert!((x - y.conj()).norm() <= tol * x.norm().max(1.0));
        }
    }
}

#[test]
fn bond_dimension_is_monotone_in_cutoff() {
    let k = 8;
    let bset = random_set(13, k, 2.0);
    let grid = TimeGrid::new(0.1, k).unwrap();
    for contract in [contract_local, contract_nonlocal] {
        let mut prev = usize::MAX;
        for lc in [0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 1e-1] {
            let f = contract(&bset, &grid, lc).unwrap();
            assert!(f.stats.peak_bond() <= prev, "lambda_c {lc}");
            prev = f.stats.peak_bond();
        }
    }
}

#[test]
fn memory_truncation_caps_the_depth() {
    let k = 6;
    let bset = random_set(8, k, 1.0);
    assert_eq!(memory_truncate(&bset, k).unwrap(), bset);
    let cut = memory_truncate(&bset, 2).unwrap();
    assert_eq!(cut.depth(), 2);
    assert!(memory_truncate(&bset, k + 1).is_err());
    let grid = TimeGrid::new(0.1, k).unwrap();
    let exact = brute_force_influence(&cut, k).unwrap();
    for f in [
        contract_local(&cut, &grid, 0.0),
        contract_nonlocal(&cut, &grid, 0.0),
    ] {
        assert!(max_rel_diff(&f.unwrap().to_dense().unwrap(), &exact) < 1e-10);
    }
    // depth zero: the functional factorizes over legs
    let markov = memory_truncate(&bset, 0).unwrap();
    let f = contract_local(&markov, &grid, 1e-12).unwrap();
    assert!(f.stats.max_bond.iter().all(|&b| b == 1));
}

#[test]
fn binary_round_trip() {
    let k = 5;
    let bset = random_set(2, k, 1.0);
    let f = contract_local(&bset, &TimeGrid::new(0.25, k).unwrap(), 1e-9).unwrap();
    let mut buf = Vec::new();
    write_mps(&f, &mut buf).unwrap();
    let g = read_mps(buf.as_slice()).unwrap();
    assert_eq!(g.sites, f.sites);
    assert_eq!(
        (g.d, g.dt, g.lambda_c, g.scheme),
        (f.d, f.dt, f.lambda_c, f.scheme)
    );
    assert_eq!(g.lambdas, f.lambdas);
    assert_eq!(g.stats.discarded_weight, f.stats.discarded_weight);
    buf[0] = b'X';
    assert!(read_mps(buf.as_slice()).is_err());
    assert!(read_mps(&buf[..20]).is_err());
}

use proptest::prelude::*;

use procten::bath::{compound_index, influence_tensors, MemoryKernel};
use procten::network::{contract, read_mps, write_mps};
use procten::oracle::brute_force_influence;
use procten::process::{
    density_trajectory, hermiticity_error, superop, unvectorize, vectorize, Intervention, Process,
    SystemSpec,
};
use procten::tensor::{svd_truncate, truncation_rank, Matrix, C64};
use procten::{BreakPolicy, Scheme, TimeGrid};

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(complex(), rows * cols)
        .prop_map(move |v| Matrix::from_vec(rows, cols, v).unwrap())
}

/// Kernel with `|η_l| ≲ scale / (l + 1)²`.
fn kernel(k: usize, scale: f64) -> impl Strategy<Value = MemoryKernel> {
    prop::collection::vec(complex(), k + 1).prop_map(move |v| {
        let eta = v
            .into_iter()
            .enumerate()
            .map(|(l, z)| z * (scale / ((l + 1) * (l + 1)) as f64))
            .collect();
        MemoryKernel::new(0.1, eta).unwrap()
    })
}

fn lambdas() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 2)
}

fn state() -> impl Strategy<Value = Matrix> {
    matrix(2, 2).prop_map(|a| {
        let p = a.matmul(&a.adjoint()).unwrap();
        let tr = p.trace();
        p.scale(tr.inv())
    })
}

fn unitary() -> impl Strategy<Value = Matrix> {
    (0.0..6.3f64, 0.0..6.3f64, 0.0..6.3f64).prop_map(|(a, b, g)| {
        let (c, s) = (a.cos(), a.sin());
        let p = C64::from_polar(1.0, b);
        let q = C64::from_polar(1.0, g);
        Matrix::from_rows(&[vec![p * c, -q.conj() * s], vec![q * s, p.conj() * c]]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn truncated_svd_error_is_the_discarded_weight(m in matrix(6, 5), lc in 0.0..0.5f64) {
        let svd = svd_truncate(&m, lc).unwrap();
        let err = svd.reconstruct().sub(&m).unwrap().frobenius_norm();
        prop_assert!((err * err - svd.discarded_weight).abs() <= 1e-10 * svd.total_weight.max(1.0));
        prop_assert!(svd.relative_discarded_weight().sqrt() <= lc + 1e-12);
    }

    #[test]
    fn truncation_rank_is_monotone(
        mut sv in prop::collection::vec(0.0..10.0f64, 1..12),
        a in 0.0..1.0f64,
        b in 0.0..1.0f64,
    ) {
        sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(truncation_rank(&sv, hi) <= truncation_rank(&sv, lo));
        prop_assert!(truncation_rank(&sv, hi) >= 1);
    }

    #[test]
    fn influence_tensors_have_unit_diagonal_rows_and_conjugate_symmetry(
        kern in kernel(4, 1.0),
        lam in lambdas(),
    ) {
        let set = influence_tensors(&kern, &lam).unwrap();
        let swap = |a: usize| compound_index(a / 2, a % 2, 2);
        for b in &set.b {
            for a in 0..4 {
                for s in 0..2 {
                    prop_assert_eq!(b[(compound_index(s, s, 2), a)], C64::new(1.0, 0.0));
                }
                for a2 in 0..4 {
                    prop_assert!((b[(swap(a), swap(a2))] - b[(a, a2)].conj()).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn vectorization_round_trips(m in matrix(3, 3)) {
        prop_assert_eq!(unvectorize(&vectorize(&m), 3), m);
    }

    #[test]
    fn superoperators_compose(a in matrix(2, 2), b in matrix(2, 2), c in matrix(2, 2), d in matrix(2, 2)) {
        // (ρ ↦ c a ρ b† d†) is the product of the two superoperators
        let first = superop(&a, &b);
        let second = superop(&c, &d);
        let both = superop(&c.matmul(&a).unwrap(), &d.matmul(&b).unwrap());
        prop_assert!(second.matmul(&first).unwrap().max_abs_diff(&both) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exact_contraction_matches_brute_force(kern in kernel(5, 0.8), lam in lambdas(), local in any::<bool>()) {
        let set = influence_tensors(&kern, &lam).unwrap();
        let k = 5;
        let grid = TimeGrid::new(0.1, k).unwrap();
        let scheme = if local { Scheme::Local } else { Scheme::Nonlocal };
        let dense = contract(scheme, &set, &grid, 0.0).unwrap().to_dense().unwrap();
        let exact = brute_force_influence(&set, k).unwrap();
        let scale = exact.data().iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let err = dense.data().iter().zip(exact.data()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10 * scale);
    }

    #[test]
    fn unitary_interventions_keep_states_physical(
        kern in kernel(8, 0.3),
        rho0 in state(),
        ops in prop::collection::vec(unitary(), 8),
    ) {
        let set = influence_tensors(&kern, &[0.5, -0.5]).unwrap();
        let grid = TimeGrid::new(0.1, 8).unwrap();
        let mps = contract(Scheme::Local, &set, &grid, 0.0).unwrap();
        let sys = SystemSpec::spin_boson(rho0).unwrap();
        let p = Process::new(&mps, &sys).unwrap();
        let seq: Vec<Intervention> = ops.iter().map(|u| Intervention::Super(superop(u, u))).collect();
        for n in 0..=8 {
            let rho = procten::process::contract_with_interventions(&p, &seq[..n], &BreakPolicy::None).unwrap();
            prop_assert!((rho.trace() - 1.0).norm() < 1e-10);
            prop_assert!(hermiticity_error(&rho) < 1e-10);
        }
        let traj = density_trajectory(&p, 8, &BreakPolicy::EveryStep).unwrap();
        prop_assert!(traj.iter().all(|r| (r.trace() - 1.0).norm() < 1e-10));
    }

    #[test]
    fn binary_format_round_trips(kern in kernel(6, 0.8), lc in 0.0..1e-3f64, local in any::<bool>()) {
        let set = influence_tensors(&kern, &[0.5, -0.5]).unwrap();
        let grid = TimeGrid::new(0.1, 6).unwrap();
        let scheme = if local { Scheme::Local } else { Scheme::Nonlocal };
        let mps = contract(scheme, &set, &grid, lc).unwrap();
        let mut buf = Vec::new();
        write_mps(&mps, &mut buf).unwrap();
        let back = read_mps(buf.as_slice()).unwrap();
        prop_assert_eq!(back.sites, mps.sites);
        prop_assert_eq!(back.log_scale, mps.log_scale);
        prop_assert_eq!(back.scheme, mps.scheme);
    }
}

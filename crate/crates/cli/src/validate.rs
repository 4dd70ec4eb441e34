//! Desk-scale comparisons against the independent oracles.

use procten::bath::{compound_index, influence_tensors, memory_kernel};
use procten::network::{contract, memory_truncate};
use procten::oracle::{
    brute_force_influence, exact_few_mode_trajectory, path_sum_dynamics, FewModeModel,
};
use procten::process::{
    density_trajectory, hermiticity_error, min_eigenvalue, Intervention, Process, SystemSpec,
};
use procten::scaling::error_bound_epsilon;
use procten::tensor::{Matrix, C64, ZERO};
use procten::{BathSpec, BreakPolicy, DiscreteMode, InfluenceTensorSet, Result, Scheme, TimeGrid};

use crate::config::RunConfig;
use crate::Failure;

const K: usize = 6;

struct Desk {
    bath: BathSpec,
    sys: SystemSpec,
    grid: TimeGrid,
    bset: InfluenceTensorSet,
}

fn desk(cfg: Option<&RunConfig>) -> std::result::Result<Desk, Failure> {
    let (bath, sys, dt) = match cfg {
        Some(c) => (c.bath()?, c.system()?, c.grid.dt),
        None => (
            BathSpec::ohmic(0.5, 5.0, 2.0)?,
            SystemSpec::spin_boson(Matrix::diag(&[C64::new(1.0, 0.0), ZERO]))?,
            0.1,
        ),
    };
    let grid = TimeGrid::new(dt, K)?;
    let bset = influence_tensors(&memory_kernel(&grid, &bath)?, &sys.lambdas)?;
    Ok(Desk {
        bath,
        sys,
        grid,
        bset,
    })
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn brute_force(desk: &Desk) -> Result<(f64, f64)> {
    let exact = brute_force_influence(&desk.bset, K)?;
    let scale = exact.data().iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut worst = 0.0f64;
    for scheme in [Scheme::Local, Scheme::Nonlocal] {
        let dense = contract(scheme, &desk.bset, &desk.grid, 0.0)?.to_dense()?;
        worst = worst.max(max_diff(dense.data(), exact.data()) / scale);
    }
    Ok((worst, 1e-10))
}

fn path_sum(desk: &Desk) -> Result<(f64, f64)> {
    let n = 5;
    let seq = vec![Intervention::Identity; n];
    let want = path_sum_dynamics(&desk.bset, &desk.sys, desk.grid.dt, &seq)?;
    let mut worst = 0.0f64;
    for scheme in [Scheme::Local, Scheme::Nonlocal] {
        let mps = contract(scheme, &desk.bset, &desk.grid, 0.0)?;
        let p = Process::new(&mps, &desk.sys)?;
        let got = density_trajectory(&p, n, &BreakPolicy::None)?;
        worst = worst.max(got[n].max_abs_diff(&want));
    }
    Ok((worst, 1e-10))
}

fn tensor_symmetries(desk: &Desk) -> Result<(f64, f64)> {
    let d = desk.bset.d;
    let dd = desk.bset.dim();
    let swap = |a: usize| compound_index(a / d, a % d, d);
    let mut worst = 0.0f64;
    for b in &desk.bset.b {
        for a in 0..dd {
            for s in 0..d {
                worst = worst.max((b[(compound_index(s, s, d), a)] - 1.0).norm());
            }
            for a2 in 0..dd {
                worst = worst.max((b[(swap(a), swap(a2))] - b[(a, a2)].conj()).norm());
            }
        }
    }
    Ok((worst, 1e-14))
}

fn physical_states(desk: &Desk) -> Result<(f64, f64)> {
    let grid = TimeGrid::new(desk.grid.dt, 30)?;
    let bset = influence_tensors(&memory_kernel(&grid, &desk.bath)?, &desk.sys.lambdas)?;
    let mut worst = 0.0f64;
    let mut tol = 1e-12f64;
    for scheme in [Scheme::Local, Scheme::Nonlocal] {
        let mps = contract(scheme, &bset, &grid, 1e-6)?;
        tol = tol.max(mps.tolerance());
        let p = Process::new(&mps, &desk.sys)?;
        for rho in density_trajectory(&p, grid.k, &BreakPolicy::None)? {
            worst = worst
                .max((rho.trace() - 1.0).norm())
                .max(hermiticity_error(&rho))
                .max(-min_eigenvalue(&rho)?);
        }
    }
    Ok((worst, tol))
}

fn error_bound(desk: &Desk) -> Result<(f64, f64)> {
    let kernel = memory_kernel(&desk.grid, &desk.bath)?;
    let exact = brute_force_influence(&desk.bset, K)?;
    let norm = desk.bset.coupling_norm();
    // worst ratio of measured error to bound; passes at or below one
    let mut worst = 0.0f64;
    for m in 0..=K {
        let cut = brute_force_influence(&memory_truncate(&desk.bset, m)?, K)?;
        let err = exact
            .data()
            .iter()
            .zip(cut.data())
            .map(|(a, b)| ((a - b) / a).norm())
            .fold(0.0, f64::max);
        let bound = error_bound_epsilon(&kernel, norm, m, K)?;
        if err > 1e-14 {
            worst = worst.max(err / bound);
        }
    }
    Ok((worst, 1.0))
}

fn few_mode() -> Result<(f64, f64)> {
    let modes = vec![
        DiscreteMode {
            g: 0.15,
            omega: 1.3,
        },
        DiscreteMode { g: 0.1, omega: 0.7 },
    ];
    let beta = 4.0;
    let sys = SystemSpec::spin_boson(Matrix::diag(&[C64::new(1.0, 0.0), ZERO]))?;
    let grid = TimeGrid::new(0.1, 30)?;
    let spec = BathSpec::discrete(modes.clone(), beta)?;
    let bset = influence_tensors(&memory_kernel(&grid, &spec)?, &sys.lambdas)?;
    let mps = contract(Scheme::Local, &bset, &grid, 1e-9)?;
    let p = Process::new(&mps, &sys)?;
    let traj = density_trajectory(&p, grid.k, &BreakPolicy::None)?;
    let exact =
        exact_few_mode_trajectory(&FewModeModel::new(sys, modes, 6, beta)?, grid.dt, grid.k)?;
    let worst = traj
        .iter()
        .zip(&exact.states)
        .map(|(a, b)| a.max_abs_diff(b))
        .fold(0.0, f64::max);
    Ok((worst, 1e-3))
}

fn decoupled(desk: &Desk) -> Result<(f64, f64)> {
    let grid = TimeGrid::new(desk.grid.dt, 40)?;
    let lambdas = vec![0.0; desk.sys.d];
    let bset = influence_tensors(
        &memory_kernel(&grid, &BathSpec::ohmic(0.0, 1.0, 1.0)?)?,
        &lambdas,
    )?;
    let sys = SystemSpec::new(desk.sys.h0.clone(), lambdas, desk.sys.rho0.clone())?;
    let mps = contract(Scheme::Local, &bset, &grid, 1e-6)?;
    let p = Process::new(&mps, &sys)?;
    let traj = density_trajectory(&p, grid.k, &BreakPolicy::None)?;
    // closed evolution ρ(t) = U ρ0 U†
    let u = procten::process::unitary_step(&sys.h0, grid.dt)?;
    let mut rho = sys.rho0.clone();
    let mut worst = 0.0f64;
    for got in &traj {
        worst = worst.max(got.max_abs_diff(&rho));
        rho = u.matmul(&rho)?.matmul(&u.adjoint())?;
    }
    Ok((worst, 1e-10))
}

pub fn run(cfg: Option<&RunConfig>) -> std::result::Result<(), Failure> {
    let desk = desk(cfg)?;
    let checks: Vec<(&str, Result<(f64, f64)>)> = vec![
        ("brute-force influence functional", brute_force(&desk)),
        ("path-sum dynamics", path_sum(&desk)),
        (
            "influence tensor unity and conjugation",
            tensor_symmetries(&desk),
        ),
        ("trace, Hermiticity, positivity", physical_states(&desk)),
        ("memory truncation bound", error_bound(&desk)),
        ("few-mode Fock-space dynamics", few_mode()),
        ("decoupled unitary evolution", decoupled(&desk)),
    ];
    let mut failed = 0;
    for (name, outcome) in checks {
        match outcome {
            Ok((value, limit)) if value <= limit => {
                println!("PASS  {name:<40} {value:.2e} <= {limit:.0e}")
            }
            Ok((value, limit)) => {
                failed += 1;
                println!("FAIL  {name:<40} {value:.2e} > {limit:.0e}");
            }
            Err(e) => {
                failed += 1;
                println!("FAIL  {name:<40} {e}");
            }
        }
    }
    if failed > 0 {
        Err(Failure::Validation(failed))
    } else {
        Ok(())
    }
}

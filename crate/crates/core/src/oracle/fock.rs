use nalgebra::{DMatrix, DVector};

use crate::bath::DiscreteMode;
use crate::error::{Error, Result};
use crate::process::SystemSpec;
use crate::tensor::{hermitian_eigen, Matrix, C64, ZERO};

use super::path_sum::{propagator, to_na};

/// Largest joint Hilbert space the Fock-space oracle will build.
pub const FOCK_DIM_LIMIT: usize = 4096;

/// Thermal weight beyond the cutoff above which a run is flagged.
pub const LEAK_WARNING: f64 = 1e-6;

/// System coupled to a handful of explicit bosonic modes,
/// `H = H0 + ŝ Σ g (a + a†) + Σ ω a†a`, each mode truncated at `n_max`
/// Fock states.
#[derive(Clone, Debug)]
pub struct FewModeModel {
    pub sys: SystemSpec,
    pub modes: Vec<DiscreteMode>,
    pub n_max: usize,
    pub beta: f64,
}

/// Reduced states `ρ_0..ρ_n` from the explicit simulation.
#[derive(Clone, Debug)]
pub struct FewModeTrajectory {
    pub states: Vec<Matrix>,
    /// Largest per-mode thermal weight lost to the truncation.
    pub thermal_leak: f64,
    pub leak_warning: bool,
}

impl FewModeModel {
    pub fn new(sys: SystemSpec, modes: Vec<DiscreteMode>, n_max: usize, beta: f64) -> Result<Self> {
        let m = FewModeModel {
            sys,
            modes,
            n_max,
            beta,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.sys.validate()?;
        if self.n_max < 2 {
            return Err(Error::Domain(format!("n_max = {} < 2", self.n_max)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Domain(format!(
                "beta must be > 0, got {}",
                self.beta
            )));
        }
        if self
            .modes
            .iter()
            .any(|m| !(m.omega > 0.0) || !m.g.is_finite())
        {
            return Err(Error::Domain("modes need omega > 0 and finite g".into()));
        }
        let dim = (self.n_max as u128)
            .checked_pow(self.modes.len() as u32)
            .map(|b| b * self.sys.d as u128);
        if dim.is_none_or(|x| x > FOCK_DIM_LIMIT as u128) {
            return Err(Error::SizeGuard(format!(
                "{} modes at n_max = {} exceed {FOCK_DIM_LIMIT} states",
                self.modes.len(),
                self.n_max
            )));
        }
        Ok(())
    }

    fn bath_dim(&self) -> usize {
        self.n_max.pow(self.modes.len() as u32)
    }

    /// Joint Hamiltonian, system index major.
    fn hamiltonian(&self) -> DMatrix<C64> {
        let (d, nb, nm) = (self.sys.d, self.bath_dim(), self.n_max);
        let dim = d * nb;
        let mut h = DMatrix::from_element(dim, dim, ZERO);
        let digit = |b: usize, m: usize| (b / nm.pow(m as u32)) % nm;
        for s in 0..d {
            for s2 in 0..d {
                let h0 = self.sys.h0[(s, s2)];
                if h0 != ZERO {
                    for b in 0..nb {
                        h[(s * nb + b, s2 * nb + b)] += h0;
                    }
                }
            }
        }
        for b in 0..nb {
            for (m, mode) in self.modes.iter().enumerate() {
                let n = digit(b, m);
                for s in 0..d {
                    h[(s * nb + b, s * nb + b)] += C64::new(mode.omega * n as f64, 0.0);
                }
                // a† raises mode m by one
                if n + 1 < nm {
                    let b_up = b + nm.pow(m as u32);
                    let amp = mode.g * ((n + 1) as f64).sqrt();
                    for (s, &lam) in self.sys.lambdas.iter().enumerate() {
                        let x = C64::new(lam * amp, 0.0);
                        h[(s * nb + b_up, s * nb + b)] += x;
                        h[(s * nb + b, s * nb + b_up)] += x;
                    }
                }
            }
        }
        h
    }

    /// Weights of the truncated Gibbs state of every bath configuration and
    /// the worst per-mode tail that was dropped.
    fn thermal_weights(&self) -> (Vec<f64>, f64) {
        let nm = self.n_max;
        let mut leak: f64 = 0.0;
        let per_mode: Vec<Vec<f64>> = self
            .modes
            .iter()
            .map(|mode| {
                let x = (-self.beta * mode.omega).exp();
                leak = leak.max(x.powi(nm as i32));
                let raw: Vec<f64> = (0..nm).map(|n| x.powi(n as i32)).collect();
                let z: f64 = raw.iter().sum();
                raw.into_iter().map(|p| p / z).collect()
            })
            .collect();
        let weights = (0..self.bath_dim())
            .map(|b| {
                per_mode
                    .iter()
                    .enumerate()
                    .map(|(m, p)| p[(b / nm.pow(m as u32)) % nm])
                    .product()
            })
            .collect();
        (weights, leak)
    }
}

/// One term `w |ψ⟩⟨φ|` of the joint operator.
struct Branch {
    weight: f64,
    ket: DVector<C64>,
    bra: DVector<C64>,
}

fn run(
    model: &FewModeModel,
    dt: f64,
    n: usize,
    insertions: &[(usize, Matrix, Matrix)],
) -> Result<FewModeTrajectory> {
    model.validate()?;
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    for w in insertions.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::Config(
                "insertion steps must be strictly increasing".into(),
            ));
        }
    }
    if insertions
        .iter()
        .any(|(j, a, b)| *j > n || a.rows() != model.sys.d || b.rows() != model.sys.d)
    {
        return Err(Error::Config(
            "insertion outside the grid or of the wrong size".into(),
        ));
    }
    let (d, nb) = (model.sys.d, model.bath_dim());
    let dim = d * nb;
    let (weights, leak) = model.thermal_weights();
    let leak_warning = leak > LEAK_WARNING;
    if leak_warning {
        log::warn!("Fock truncation drops thermal weight {leak:.2e}");
    }
    let (pops, vecs) = hermitian_eigen(&model.sys.rho0)?;
    let mut branches = Vec::new();
    for (q, &p) in pops.iter().enumerate() {
        if p <= 1e-15 {
            continue;
        }
        for (b, &wb) in weights.iter().enumerate() {
            if wb * p <= 1e-16 {
                continue;
            }
            let ket = DVector::from_fn(
                dim,
                |i, _| if i % nb == b { vecs[(i / nb, q)] } else { ZERO },
            );
            branches.push(Branch {
                weight: p * wb,
                bra: ket.clone(),
                ket,
            });
        }
    }
    let u = propagator(&model.hamiltonian(), dt);
    let lift = |a: &Matrix| to_na(a).kronecker(&DMatrix::<C64>::identity(nb, nb));
    let lifted: Vec<(usize, DMatrix<C64>, DMatrix<C64>)> = insertions
        .iter()
        .map(|(j, a, b)| (*j, lift(a), lift(b)))
        .collect();

    let reduce = |branches: &[Branch]| {
        let mut rho = Matrix::zeros(d, d);
        for br in branches {
            for s in 0..d {
                for r in 0..d {
                    let mut acc = ZERO;
                    for b in 0..nb {
                        acc += br.ket[s * nb + b] * br.bra[r * nb + b].conj();
                    }
                    rho[(s, r)] += acc * br.weight;
                }
            }
        }
        rho
    };
    let insert = |branches: &mut [Branch], j: usize| {
        for (_, a, b) in lifted.iter().filter(|(s, _, _)| *s == j) {
            for br in branches.iter_mut() {
                br.ket = a * &br.ket;
                br.bra = b * &br.bra;
            }
        }
    };

    let mut states = Vec::with_capacity(n + 1);
    for j in 0..=n {
        insert(&mut branches, j);
        states.push(reduce(&branches));
        if j < n {
            for br in branches.iter_mut() {
                br.ket = &u * &br.ket;
                br.bra = &u * &br.bra;
            }
        }
    }
    Ok(FewModeTrajectory {
        states,
        thermal_leak: leak,
        leak_warning,
    })
}

/// Reduced states at steps `0..=n` of the exact joint evolution from
/// `ρ_0 ⊗ τ_β`.
pub fn exact_few_mode_trajectory(
    model: &FewModeModel,
    dt: f64,
    n: usize,
) -> Result<FewModeTrajectory> {
    run(model, dt, n, &[])
}

/// `tr ρ_n` with `ρ ↦ A ρ B†` applied on the joint state at each listed step.
pub fn exact_few_mode_correlation(
    model: &FewModeModel,
    dt: f64,
    n: usize,
    insertions: &[(usize, Matrix, Matrix)],
) -> Result<C64> {
    let traj = run(model, dt, n, insertions)?;
    Ok(traj.states[n].trace())
}

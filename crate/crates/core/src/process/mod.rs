//! Dressing the influence functional with the free system propagator and
//! contracting it against sequences of interventions.
//!
//! Operators are vectorized by stacking columns, so `|s⟩⟨r|` sits at
//! compound index `s + d·r` and the superoperator `ρ ↦ A ρ B†` is the
//! matrix `B* ⊗ A`.

mod eval;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{hermitian_eigen, Matrix, C64, I, ZERO};

pub use eval::{
    apply_break_policy, contract_with_interventions, density_trajectory, hermiticity_error,
    min_eigenvalue, multitime_correlation, write_trajectory_csv, Cursor, Insertion, Process,
};

const HERMITIAN_TOL: f64 = 1e-12;

/// The small system: free Hamiltonian, coupling-operator eigenvalues (the
/// coupling operator is diagonal in the working basis) and initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub d: usize,
    pub h0: Matrix,
    pub lambdas: Vec<f64>,
    pub rho0: Matrix,
}

impl SystemSpec {
    pub fn new(h0: Matrix, lambdas: Vec<f64>, rho0: Matrix) -> Result<Self> {
        let sys = SystemSpec {
            d: lambdas.len(),
            h0,
            lambdas,
            rho0,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Two-level system with `H0 = Ω σ_x/2` (Ω = 1), coupling `σ_z/2` and the
    /// given initial state.
    pub fn spin_boson(rho0: Matrix) -> Result<Self> {
        Self::new(pauli_x().scale(C64::new(0.5, 0.0)), vec![0.5, -0.5], rho0)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if d == 0 {
            return Err(Error::Dimension("system dimension must be positive".into()));
        }
        for (name, m) in [("h0", &self.h0), ("rho0", &self.rho0)] {
            if m.rows() != d || m.cols() != d {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {d}x{d}",
                    m.rows(),
                    m.cols()
                )));
            }
            if !m.is_finite() {
                return Err(Error::Domain(format!("{name} has non-finite entries")));
            }
            if m.max_abs_diff(&m.adjoint()) > HERMITIAN_TOL * m.max_abs().max(1.0) {
                return Err(Error::Domain(format!("{name} is not Hermitian")));
            }
        }
        if self.lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::Domain("coupling eigenvalues must be finite".into()));
        }
        let tr = self.rho0.trace();
        if (tr - 1.0).norm() > 1e-10 {
            return Err(Error::Domain(format!("rho0 has trace {tr}")));
        }
        let (ev, _) = hermitian_eigen(&self.rho0)?;
        if ev[0] < -1e-12 {
            return Err(Error::Domain(format!(
                "rho0 has negative eigenvalue {}",
                ev[0]
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d * self.d
    }

    pub fn with_rho0(&self, rho0: Matrix) -> Result<Self> {
        Self::new(self.h0.clone(), self.lambdas.clone(), rho0)
    }
}

pub fn pauli_x() -> Matrix {
    Matrix::from_fn(2, 2, |i, j| if i != j { C64::new(1.0, 0.0) } else { ZERO })
}

pub fn pauli_y() -> Matrix {
    Matrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => -I,
        (1, 0) => I,
        _ => ZERO,
    })
}

pub fn pauli_z() -> Matrix {
    Matrix::diag(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)])
}

/// `|0⟩⟨1|`, the lowering operator when `|0⟩` is the excited state.
pub fn sigma_minus() -> Matrix {
    Matrix::from_fn(2, 2, |i, j| {
        if (i, j) == (1, 0) {
            C64::new(1.0, 0.0)
        } else {
            ZERO
        }
    })
}

/// `σ⁺ = (σ⁻)†`.
pub fn sigma_plus() -> Matrix {
    sigma_minus().adjoint()
}

/// Column-stacked `vec(m)[s + d·r] = m[s, r]`.
pub fn vectorize(m: &Matrix) -> Vec<C64> {
    let d = m.rows();
    let mut v = vec![ZERO; d * m.cols()];
    for s in 0..d {
        for r in 0..m.cols() {
            v[s + d * r] = m[(s, r)];
        }
    }
    v
}

/// Inverse of [`vectorize`] for a `d × d` operator.
pub fn unvectorize(v: &[C64], d: usize) -> Matrix {
    Matrix::from_fn(d, d, |s, r| v[s + d * r])
}

/// Trace of a column-stacked operator.
pub fn vec_trace(v: &[C64], d: usize) -> C64 {
    (0..d).map(|s| v[s + d * s]).sum()
}

/// Superoperator `ρ ↦ e^{-i h0 dt/2} ρ e^{+i h0 dt/2}` on vectorized
/// operators.
#[derive(Clone, Debug, PartialEq)]
pub struct LiouvillePropagator {
    pub v_half: Matrix,
}

impl LiouvillePropagator {
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.v_half.apply(v)
    }
}

/// `e^{-i h dt}` for Hermitian `h`, via its eigendecomposition.
pub fn unitary_step(h: &Matrix, dt: f64) -> Result<Matrix> {
    let (ev, u) = hermitian_eigen(h)?;
    let phases: Vec<C64> = ev.iter().map(|&e| (-I * (e * dt)).exp()).collect();
    u.matmul(&Matrix::diag(&phases))?.matmul(&u.adjoint())
}

pub fn free_half_propagator(sys: &SystemSpec, dt: f64) -> Result<LiouvillePropagator> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("time step must be > 0, got {dt}")));
    }
    let u = unitary_step(&sys.h0, 0.5 * dt)?;
    Ok(LiouvillePropagator {
        v_half: superop(&u, &u),
    })
}

/// `B* ⊗ A`, the matrix of `ρ ↦ A ρ B†`.
pub fn superop(a: &Matrix, b: &Matrix) -> Matrix {
    b.conj().kron(a)
}

/// A superoperator applied to the system between two time steps.
#[derive(Clone, Debug, PartialEq)]
pub enum Intervention {
    Identity,
    /// Matrix acting on column-stacked operators.
    Super(Matrix),
}

impl Intervention {
    /// `ρ ↦ A ρ B†`.
    pub fn from_ops(a: &Matrix, b: &Matrix) -> Result<Self> {
        if !a.is_square() || a.rows() != b.rows() || a.cols() != b.cols() {
            return Err(Error::Dimension(
                "intervention operators must be equal square".into(),
            ));
        }
        Ok(Intervention::Super(superop(a, b)))
    }

    /// `ρ ↦ A ρ`.
    pub fn left(a: &Matrix) -> Result<Self> {
        Self::from_ops(a, &Matrix::identity(a.rows()))
    }

    /// `ρ ↦ ρ B†`.
    pub fn right(b: &Matrix) -> Result<Self> {
        Self::from_ops(&Matrix::identity(b.rows()), b)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Intervention::Identity)
    }

    pub fn matrix(&self, dd: usize) -> Matrix {
        match self {
            Intervention::Identity => Matrix::identity(dd),
            Intervention::Super(m) => m.clone(),
        }
    }

    /// Applies `second` after `self`.
    pub fn then(&self, second: &Intervention) -> Result<Intervention> {
        Ok(match (self, second) {
            (Intervention::Identity, x) | (x, Intervention::Identity) => x.clone(),
            (Intervention::Super(a), Intervention::Super(b)) => Intervention::Super(b.matmul(a)?),
        })
    }

    pub(crate) fn apply(&self, v: &[C64]) -> Vec<C64> {
        match self {
            Intervention::Identity => v.to_vec(),
            Intervention::Super(m) => m.apply(v),
        }
    }

    fn check(&self, dd: usize) -> Result<()> {
        if let Intervention::Super(m) = self {
            if m.rows() != dd || m.cols() != dd {
                return Err(Error::Dimension(format!(
                    "intervention is {}x{}, expected {dd}x{dd}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(())
    }
}

/// Where bath correlations are severed when evaluating multi-time quantities.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "steps", rename_all = "snake_case")]
pub enum BreakPolicy {
    /// Full memory throughout.
    #[default]
    None,
    /// Restart from a fresh thermal bath at each listed step.
    CutAtTimes(Vec<usize>),
    /// Restart after every step (time-local evolution).
    EveryStep,
}

impl BreakPolicy {
    pub fn is_cut(&self, step: usize) -> bool {
        match self {
            BreakPolicy::None => false,
            BreakPolicy::CutAtTimes(steps) => steps.contains(&step),
            BreakPolicy::EveryStep => step > 0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BreakPolicy::None => "exact",
            BreakPolicy::CutAtTimes(_) => "regression",
            BreakPolicy::EveryStep => "markov",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vectorization_is_column_stacking() {
        let m = Matrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(3.0, 0.0), c(4.0, 0.0)],
        ])
        .unwrap();
        let v = vectorize(&m);
        assert_eq!(v, vec![c(1.0, 0.0), c(3.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        assert_eq!(unvectorize(&v, 2), m);
        assert_eq!(vec_trace(&v, 2), c(5.0, 0.0));
    }

    #[test]
    fn superop_matches_direct_product() {
        let a = Matrix::from_fn(3, 3, |i, j| {
            c(i as f64 - 0.5 * j as f64, (i * j) as f64 * 0.3)
        });
        let b = Matrix::from_fn(3, 3, |i, j| c(0.2 * j as f64, i as f64 - 1.0));
        let rho = Matrix::from_fn(3, 3, |i, j| c((i + 2 * j) as f64, 0.1 * i as f64));
        let direct = a.matmul(&rho).unwrap().matmul(&b.adjoint()).unwrap();
        let via = unvectorize(&superop(&a, &b).apply(&vectorize(&rho)), 3);
        assert!(via.max_abs_diff(&direct) < 1e-13);
    }

    #[test]
    fn half_steps_compose_to_full_step() {
        let h = Matrix::from_rows(&[
            vec![c(0.3, 0.0), c(0.1, -0.7)],
            vec![c(0.1, 0.7), c(-1.2, 0.0)],
        ])
        .unwrap();
        let sys = SystemSpec::new(
            h.clone(),
            vec![0.5, -0.5],
            Matrix::diag(&[c(1.0, 0.0), ZERO]),
        )
        .unwrap();
        let half = free_half_propagator(&sys, 0.37).unwrap();
        let full = unitary_step(&h, 0.37).unwrap();
        let twice = half.v_half.matmul(&half.v_half).unwrap();
        assert!(twice.max_abs_diff(&superop(&full, &full)) < 1e-13);
        // zero Hamiltonian: identity
        let free = SystemSpec::new(Matrix::zeros(2, 2), vec![0.5, -0.5], sys.rho0.clone()).unwrap();
        let id = free_half_propagator(&free, 0.5).unwrap();
        assert!(id.v_half.max_abs_diff(&Matrix::identity(4)) < 1e-15);
    }

    #[test]
    fn invalid_systems_are_rejected() {
        let rho = Matrix::diag(&[c(1.0, 0.0), ZERO]);
        let bad_h = Matrix::from_rows(&[vec![ZERO, c(1.0, 0.0)], vec![ZERO, ZERO]]).unwrap();
        assert!(SystemSpec::new(bad_h, vec![0.5, -0.5], rho.clone()).is_err());
        let bad_rho = Matrix::diag(&[c(1.5, 0.0), c(-0.5, 0.0)]);
        assert!(SystemSpec::new(Matrix::zeros(2, 2), vec![0.5, -0.5], bad_rho).is_err());
        assert!(SystemSpec::new(Matrix::zeros(2, 2), vec![0.5], rho).is_err());
    }

    #[test]
    fn ladder_operators() {
        let sm = sigma_minus();
        let sp = sigma_plus();
        // σ⁺σ⁻ projects on |0⟩, the excited state
        let n = sp.matmul(&sm).unwrap();
        assert_eq!(n, Matrix::diag(&[c(1.0, 0.0), ZERO]));
        let comm = pauli_x().matmul(&pauli_y()).unwrap();
        assert!(comm.max_abs_diff(&pauli_z().scale(I)) < 1e-15);
    }
}

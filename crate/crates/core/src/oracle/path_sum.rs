use nalgebra::DMatrix;

use crate::bath::InfluenceTensorSet;
use crate::error::{Error, Result};
use crate::process::{Intervention, SystemSpec};
use crate::tensor::{Matrix, C64, ZERO};

use super::brute::brute_force_influence;

pub(crate) fn to_na(m: &Matrix) -> DMatrix<C64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

/// `exp(−i h t)` by scaling and squaring.
pub(crate) fn propagator(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    (h * C64::new(0.0, -t)).exp()
}

/// Half-step Liouvillian built independently of the process module: the
/// column-stacked matrix of `ρ ↦ U ρ U†` with `U = exp(−i h0 dt/2)`.
fn half_step(sys: &SystemSpec, dt: f64) -> DMatrix<C64> {
    let u = propagator(&to_na(&sys.h0), 0.5 * dt);
    u.conjugate().kronecker(&u)
}

/// `ρ_n` by summing every compound path explicitly:
/// `Σ_α F(α) · V P_{α_n} V A_{n−1} ⋯ V P_{α_1} V A_0 vec ρ_0`, with
/// `n = seq.len()` and the dense influence functional over `n` legs.
pub fn path_sum_dynamics(
    bset: &InfluenceTensorSet,
    sys: &SystemSpec,
    dt: f64,
    seq: &[Intervention],
) -> Result<Matrix> {
    sys.validate()?;
    if sys.d != bset.d {
        return Err(Error::Config(format!(
            "system d = {} but tensors have d = {}",
            sys.d, bset.d
        )));
    }
    let (d, dd, n) = (sys.d, bset.dim(), seq.len());
    let rho0: Vec<C64> = (0..dd).map(|a| sys.rho0[(a % d, a / d)]).collect();
    if n == 0 {
        return Ok(Matrix::from_fn(d, d, |s, r| rho0[s + d * r]));
    }
    let f = brute_force_influence(bset, n)?;
    let v = half_step(sys, dt);
    let ops: Vec<DMatrix<C64>> = seq
        .iter()
        .map(|op| {
            let m = to_na(&op.matrix(dd));
            if m.nrows() != dd || m.ncols() != dd {
                return Err(Error::Dimension("intervention size".into()));
            }
            Ok(&v * m)
        })
        .collect::<Result<_>>()?;

    let mut total = vec![ZERO; dd];
    let mut path = vec![0usize; n];
    let start = nalgebra::DVector::from_vec(rho0);
    descend(0, &start, &ops, &v, &f, &mut path, &mut total);
    Ok(Matrix::from_fn(d, d, |s, r| total[s + d * r]))
}

fn descend(
    j: usize,
    state: &nalgebra::DVector<C64>,
    ops: &[DMatrix<C64>],
    v: &DMatrix<C64>,
    f: &crate::tensor::DenseTensor,
    path: &mut Vec<usize>,
    total: &mut [C64],
) {
    let n = ops.len();
    if j == n {
        let w = f.get(path);
        for (t, s) in total.iter_mut().zip(state.iter()) {
            *t += w * s;
        }
        return;
    }
    let y = &ops[j] * state;
    for a in 0..y.len() {
        if y[a] == ZERO {
            continue;
        }
        path[j] = a;
        let next = v.column(a) * y[a];
        descend(j + 1, &next, ops, v, f, path, total);
    }
}

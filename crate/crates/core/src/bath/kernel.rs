use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::tensor::{Matrix, C64, ONE, ZERO};

use super::{correlation, BathSpec, TimeGrid};

/// Largest real part of an influence exponent accepted before `exp` is
/// considered to overflow.
pub const EXPONENT_GUARD: f64 = 700.0;

/// Upper limit on Gauss–Legendre panels per half-cell.
const MAX_PANELS: usize = 4096;

/// Discretized memory kernel `η_l`, `l = 0..=k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryKernel {
    pub dt: f64,
    pub eta: Vec<C64>,
}

impl MemoryKernel {
    pub fn new(dt: f64, eta: Vec<C64>) -> Result<Self> {
        if eta.is_empty() {
            return Err(Error::Domain("memory kernel needs at least eta_0".into()));
        }
        if eta.iter().any(|e| !(e.re.is_finite() && e.im.is_finite())) {
            return Err(Error::Numeric("non-finite memory kernel entry".into()));
        }
        Ok(MemoryKernel { dt, eta })
    }

    /// Largest step separation `k`.
    pub fn k(&self) -> usize {
        self.eta.len() - 1
    }
}

/// Panels per half-cell: at least the requested count, and enough that no
/// panel is wider than twice the shortest correlation time of the bath.
fn panels_for(grid: &TimeGrid, spec: &BathSpec) -> usize {
    let shortest = match spec.mode_weights() {
        Some(w) => w
            .iter()
            .map(|&(om, _)| 1.0 / om)
            .fold(f64::INFINITY, f64::min),
        None => (1.0 / spec.omega_c).min(spec.beta),
    };
    let need = (grid.dt / (2.0 * shortest)).ceil();
    let need = if need.is_finite() { need as usize } else { 1 };
    spec.quad.panels.max(need).min(MAX_PANELS)
}

/// Memory kernel on `grid`.
///
/// The double integrals over each pair of time cells are reduced exactly to
/// single integrals over the time difference,
///
/// `η_0 = ∫_0^δt (δt − u) C(u) du`,
/// `η_l = ∫_{-δt}^{δt} (δt − |v|) C(lδt + v) dv`,
///
/// and each half of the triangular weight is integrated with Gauss–Legendre
/// panels. Separations are evaluated in parallel.
pub fn memory_kernel(grid: &TimeGrid, spec: &BathSpec) -> Result<MemoryKernel> {
    spec.validate()?;
    let dt = grid.dt;
    if spec.is_decoupled() {
        return MemoryKernel::new(dt, vec![ZERO; grid.k + 1]);
    }
    let gl = GaussLegendre::new(spec.quad.nodes);
    let panels = panels_for(grid, spec);
    let eta = (0..=grid.k)
        .into_par_iter()
        .map(|l| {
            let centre = l as f64 * dt;
            let mut err = None;
            let mut f = |v: f64| match correlation(centre + v, spec) {
                Ok(cv) => cv * (dt - v.abs()),
                Err(e) => {
                    err.get_or_insert(e);
                    ZERO
                }
            };
            let upper = gl.integrate(0.0, dt, panels, &mut f);
            let value = if l == 0 {
                upper
            } else {
                upper + gl.integrate(-dt, 0.0, panels, &mut f)
            };
            match err {
                Some(e) => Err(e),
                None => Ok(value),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    MemoryKernel::new(dt, eta)
}

/// Compound index `α = (s, r) ↦ s + d·r` of the column-stacked operator
/// `|s⟩⟨r|`.
pub fn compound_index(s: usize, r: usize, d: usize) -> usize {
    s + d * r
}

/// Inverse of [`compound_index`].
pub fn split_compound(alpha: usize, d: usize) -> (usize, usize) {
    (alpha % d, alpha / d)
}

/// Influence tensors `b_l`, one `d² × d²` matrix per step separation, with
/// the later leg on the rows and the earlier leg on the columns.
#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceTensorSet {
    pub d: usize,
    pub lambdas: Vec<f64>,
    pub b: Vec<Matrix>,
}

impl InfluenceTensorSet {
    /// Compound (Liouville) dimension `d²`.
    pub fn dim(&self) -> usize {
        self.d * self.d
    }

    /// Largest separation covered.
    pub fn k(&self) -> usize {
        self.b.len() - 1
    }

    /// True when `b_l` is identically one and contributes nothing.
    pub fn is_trivial(&self, l: usize) -> bool {
        self.b[l].data().iter().all(|&v| v == ONE)
    }

    /// Largest separation with a non-trivial tensor (zero if none).
    pub fn depth(&self) -> usize {
        (1..self.b.len())
            .rev()
            .find(|&l| !self.is_trivial(l))
            .unwrap_or(0)
    }

    /// `max |λ|`, the operator norm of the coupling operator.
    pub fn coupling_norm(&self) -> f64 {
        self.lambdas.iter().fold(0.0, |m, l| m.max(l.abs()))
    }

    pub(crate) fn check(&self) -> Result<()> {
        let dd = self.dim();
        if self.d == 0 || self.lambdas.len() != self.d || self.b.is_empty() {
            return Err(Error::Dimension(format!(
                "influence set with d = {}, {} eigenvalues, {} tensors",
                self.d,
                self.lambdas.len(),
                self.b.len()
            )));
        }
        if let Some(l) = self.b.iter().position(|m| m.rows() != dd || m.cols() != dd) {
            return Err(Error::Dimension(format!("b_{l} is not {dd}x{dd}")));
        }
        Ok(())
    }
}

/// Evaluates `[b_l]^{α β} = exp(−(λ_{s_α} − λ_{r_α})(η_l λ_{s_β} − η_l^* λ_{r_β}))`.
pub fn influence_tensors(kernel: &MemoryKernel, lambdas: &[f64]) -> Result<InfluenceTensorSet> {
    let d = lambdas.len();
    if d == 0 {
        return Err(Error::Dimension("no coupling eigenvalues".into()));
    }
    if lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::Domain("non-finite coupling eigenvalue".into()));
    }
    let dd = d * d;
    let mut b = Vec::with_capacity(kernel.eta.len());
    for (l, &eta) in kernel.eta.iter().enumerate() {
        let mut m = Matrix::zeros(dd, dd);
        for row in 0..dd {
            let (si, ri) = split_compound(row, d);
            let left = lambdas[si] - lambdas[ri];
            for col in 0..dd {
                if left == 0.0 {
                    m[(row, col)] = ONE;
                    continue;
                }
                let (sj, rj) = split_compound(col, d);
                let exponent = -(eta * lambdas[sj] - eta.conj() * lambdas[rj]) * left;
                if exponent.re > EXPONENT_GUARD {
                    return Err(Error::Numeric(format!(
                        "influence exponent {:.3e} overflows at separation {l}",
                        exponent.re
                    )));
                }
                m[(row, col)] = exponent.exp();
            }
        }
        b.push(m);
    }
    Ok(InfluenceTensorSet {
        d,
        lambdas: lambdas.to_vec(),
        b,
    })
}

/// Writes `l, re_eta, im_eta` rows.
pub fn write_kernel_csv<W: Write>(kernel: &MemoryKernel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["l", "re_eta", "im_eta"])?;
    for (l, e) in kernel.eta.iter().enumerate() {
        w.write_record([l.to_string(), e.re.to_string(), e.im.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every entry of every `b_l` as `l, row, col, re, im`.
pub fn write_influence_csv<W: Write>(set: &InfluenceTensorSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["l", "row", "col", "re", "im"])?;
    for (l, m) in set.b.iter().enumerate() {
        for row in 0..m.rows() {
            for col in 0..m.cols() {
                let v = m[(row, col)];
                w.write_record([
                    l.to_string(),
                    row.to_string(),
                    col.to_string(),
                    v.re.to_string(),
                    v.im.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

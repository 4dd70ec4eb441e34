use std::time::Instant;

use crate::bath::{InfluenceTensorSet, TimeGrid};
use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Matrix, C64, ONE};

use super::mps::{BoundaryMps, ContractionStats, MpsSite};
use super::row::{build_local_row, build_nonlocal_row, Scheme};

/// Compressed influence functional over `k` legs. Site `j` carries the
/// compound index `α_{j+1}` of time step `j + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceMps {
    pub d: usize,
    /// Coupling-operator eigenvalues the legs are labelled by.
    pub lambdas: Vec<f64>,
    pub dt: f64,
    pub lambda_c: f64,
    pub scheme: Scheme,
    pub sites: Vec<MpsSite>,
    /// The functional is `exp(log_scale)` times the product of the sites.
    pub log_scale: f64,
    pub stats: ContractionStats,
}

impl InfluenceMps {
    pub fn k(&self) -> usize {
        self.sites.len()
    }

    pub fn dim(&self) -> usize {
        self.d * self.d
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|s| s.right).max().unwrap_or(1).max(1)
    }

    fn as_chain(&self) -> BoundaryMps {
        BoundaryMps {
            sites: self.sites.clone(),
            finalized: self.sites.len(),
            log_scale: self.log_scale,
            stats: self.stats.clone(),
        }
    }

    /// `F^{α_k…α_1}` with `legs[j] = α_{j+1}`.
    pub fn element(&self, legs: &[usize]) -> Result<C64> {
        self.as_chain().element(legs)
    }

    /// Dense `F` with axis `j` for `α_{j+1}`.
    pub fn to_dense(&self) -> Result<DenseTensor> {
        self.as_chain().to_dense()
    }

    /// Truncation tolerance `10·sqrt(cumulative relative discarded weight)`.
    pub fn tolerance(&self) -> f64 {
        self.stats.truncation_tolerance()
    }
}

fn check_inputs(bset: &InfluenceTensorSet, grid: &TimeGrid, lambda_c: f64) -> Result<()> {
    bset.check()?;
    if grid.k > bset.b.len() {
        return Err(Error::Domain(format!(
            "{} steps need b_0..b_{}, only {} influence tensors given",
            grid.k,
            grid.k - 1,
            bset.b.len()
        )));
    }
    if !(lambda_c >= 0.0) {
        return Err(Error::Domain(format!(
            "cutoff must be >= 0, got {lambda_c}"
        )));
    }
    Ok(())
}

fn record(mps: &mut BoundaryMps, started: Instant) {
    let bond = mps.max_bond();
    mps.stats.max_bond.push(bond);
    mps.stats.wall_time.push(started.elapsed().as_secs_f64());
}

/// Grows the boundary one leg per iteration: append a fresh leg, multiply in
/// the row tying it to all earlier legs, then sweep the whole chain.
pub fn contract_nonlocal(
    bset: &InfluenceTensorSet,
    grid: &TimeGrid,
    lambda_c: f64,
) -> Result<InfluenceMps> {
    check_inputs(bset, grid, lambda_c)?;
    let dd = bset.dim();
    let mut mps = BoundaryMps::ones(0, dd);
    for i in 1..=grid.k {
        let started = Instant::now();
        let mut step = || -> Result<()> {
            let row = build_nonlocal_row(i, bset)?;
            mps.sites.push(MpsSite::ones(dd));
            row.apply(&mut mps)?;
            mps.sweep_compress(lambda_c)
        };
        step().map_err(|e| Error::at_iteration(i, e))?;
        record(&mut mps, started);
    }
    Ok(finish(bset, grid, lambda_c, Scheme::Nonlocal, mps))
}

/// Starts from an all-ones chain over `k` legs and applies the rows that
/// fix `α_1, α_2, …` in turn. After row `i` only legs `i..` beyond the
/// finalized prefix are swept, and only as far as any thread has reached.
pub fn contract_local(
    bset: &InfluenceTensorSet,
    grid: &TimeGrid,
    lambda_c: f64,
) -> Result<InfluenceMps> {
    check_inputs(bset, grid, lambda_c)?;
    let (dd, k) = (bset.dim(), grid.k);
    let depth = bset.depth();
    let mut mps = BoundaryMps::ones(k, dd);
    for i in 1..=k {
        let started = Instant::now();
        let mut step = || -> Result<()> {
            let row = build_local_row(i, k, bset)?;
            row.apply(&mut mps)?;
            let reach = (i + depth).min(k);
            mps.sweep_range(i - 1..reach, lambda_c)?;
            mps.finalized = i;
            Ok(())
        };
        step().map_err(|e| Error::at_iteration(i, e))?;
        record(&mut mps, started);
    }
    Ok(finish(bset, grid, lambda_c, Scheme::Local, mps))
}

fn finish(
    bset: &InfluenceTensorSet,
    grid: &TimeGrid,
    lambda_c: f64,
    scheme: Scheme,
    mps: BoundaryMps,
) -> InfluenceMps {
    InfluenceMps {
        d: bset.d,
        lambdas: bset.lambdas.clone(),
        dt: grid.dt,
        lambda_c,
        scheme,
        sites: mps.sites,
        log_scale: mps.log_scale,
        stats: mps.stats,
    }
}

/// Contracts with the chosen scheme.
pub fn contract(
    scheme: Scheme,
    bset: &InfluenceTensorSet,
    grid: &TimeGrid,
    lambda_c: f64,
) -> Result<InfluenceMps> {
    match scheme {
        Scheme::Nonlocal => contract_nonlocal(bset, grid, lambda_c),
        Scheme::Local => contract_local(bset, grid, lambda_c),
    }
}

/// Replaces every `b_l` with `l > m` by the all-ones matrix, capping the
/// network depth at `m`.
pub fn memory_truncate(bset: &InfluenceTensorSet, m: usize) -> Result<InfluenceTensorSet> {
    bset.check()?;
    let k = bset.k();
    if m > k {
        return Err(Error::Domain(format!(
            "depth {m} beyond the {k} available separations"
        )));
    }
    let dd = bset.dim();
    let mut out = bset.clone();
    for b in out.b.iter_mut().skip(m + 1) {
        *b = Matrix::from_fn(dd, dd, |_, _| ONE);
    }
    Ok(out)
}

//! Cost and accuracy predictors for memory truncation, and a timing harness
//! that runs both contraction schemes on identical inputs.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{influence_tensors, memory_kernel, BathSpec, MemoryKernel, TimeGrid};
use crate::error::{Error, Result};
use crate::network::{contract, Scheme};
use crate::process::{density_trajectory, BreakPolicy, Process, SystemSpec};
use crate::tensor::{Matrix, C64, ZERO};

/// Elementwise trajectory agreement required of the two schemes.
pub const CROSS_SCHEME_TOLERANCE: f64 = 1e-4;

/// Upper bound on the relative error of `F` when every separation `l ≥ m`
/// is dropped from a `k`-step network:
/// `2 ‖ŝ‖ Σ_{l=m}^{k} (k − l) |η_l|`.
///
/// The bound controls the influence exponent; it turns into a relative error
/// of `F` only while it is small.
pub fn error_bound_epsilon(
    kernel: &MemoryKernel,
    coupling_norm: f64,
    m: usize,
    k: usize,
) -> Result<f64> {
    if m > k || k > kernel.k() {
        return Err(Error::Domain(format!(
            "need m <= k <= {}, got m = {m}, k = {k}",
            kernel.k()
        )));
    }
    let sum: f64 = (m..=k).map(|l| (k - l) as f64 * kernel.eta[l].norm()).sum();
    Ok(2.0 * coupling_norm * sum)
}

/// `error_bound_epsilon` for every depth `m = 0..=k` at once.
pub fn error_bound_profile(
    kernel: &MemoryKernel,
    coupling_norm: f64,
    k: usize,
) -> Result<Vec<f64>> {
    if k > kernel.k() {
        return Err(Error::Domain(format!(
            "k = {k} beyond the kernel length {}",
            kernel.k()
        )));
    }
    let mut out = vec![0.0; k + 1];
    let mut acc = 0.0;
    for l in (0..=k).rev() {
        acc += (k - l) as f64 * kernel.eta[l].norm();
        out[l] = 2.0 * coupling_norm * acc;
    }
    Ok(out)
}

/// Smallest depth whose bound is below `epsilon`.
pub fn depth_for_error(
    kernel: &MemoryKernel,
    coupling_norm: f64,
    k: usize,
    epsilon: f64,
) -> Result<usize> {
    let profile = error_bound_profile(kernel, coupling_norm, k)?;
    Ok(profile.iter().position(|&e| e < epsilon).unwrap_or(k))
}

/// Large-cutoff estimate of the memory time needed for relative error
/// `epsilon` over `t_max`: `α t_max / (π β ω_c ε)`.
///
/// The estimate assumes `ω_c t_m ≫ 1` and `t_m ≫ β`; a warning is logged
/// when either fails.
pub fn predicted_memory_time(spec: &BathSpec, t_max: f64, epsilon: f64) -> f64 {
    if spec.alpha == 0.0 {
        return 0.0;
    }
    let t_m = spec.alpha * t_max / (std::f64::consts::PI * spec.beta * spec.omega_c * epsilon);
    if spec.omega_c * t_m < 10.0 {
        log::warn!(
            "memory-time estimate outside its regime: omega_c * t_m = {:.3}",
            spec.omega_c * t_m
        );
    }
    if t_m < 10.0 * spec.beta {
        log::warn!(
            "memory-time estimate outside its regime: t_m / beta = {:.3}",
            t_m / spec.beta
        );
    }
    t_m
}

/// One benchmark configuration: an Ohmic-family spin-boson model.
#[derive(Clone, Debug)]
pub struct BenchCase {
    pub bath: BathSpec,
    pub dt: f64,
    pub k: usize,
    pub lambda_c: f64,
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub schemes: Vec<Scheme>,
    /// Run each contraction once untimed before the measured run.
    pub warmup: bool,
    /// Run cases concurrently. Timings then share the machine.
    pub parallel: bool,
    pub tolerance: f64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            schemes: vec![Scheme::Nonlocal, Scheme::Local],
            warmup: true,
            parallel: false,
            tolerance: CROSS_SCHEME_TOLERANCE,
        }
    }
}

/// Timing of one contraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub scheme: Scheme,
    pub k: usize,
    pub dt: f64,
    pub lambda_c: f64,
    pub alpha: f64,
    pub omega_c: f64,
    pub nu: f64,
    pub temperature: f64,
    pub wall_time: Vec<f64>,
    pub max_bond: Vec<usize>,
    pub total_time: f64,
    pub discarded_weight: f64,
    /// Largest elementwise trajectory difference to the other scheme.
    pub cross_scheme_diff: Option<f64>,
    pub valid: bool,
    pub error: Option<String>,
}

impl BenchRecord {
    fn failed(case: &BenchCase, scheme: Scheme, err: &Error) -> Self {
        BenchRecord {
            scheme,
            k: case.k,
            dt: case.dt,
            lambda_c: case.lambda_c,
            alpha: case.bath.alpha,
            omega_c: case.bath.omega_c,
            nu: case.bath.nu,
            temperature: case.bath.temperature(),
            wall_time: Vec::new(),
            max_bond: Vec::new(),
            total_time: 0.0,
            discarded_weight: 0.0,
            cross_scheme_diff: None,
            valid: false,
            error: Some(err.to_string()),
        }
    }

    /// Least-squares slope of the per-iteration time against the iteration
    /// index, over iterations `from..`.
    pub fn time_slope(&self, from: usize) -> f64 {
        least_squares_slope(self.wall_time.get(from..).unwrap_or(&[]))
    }

    fn check(&self) -> Result<()> {
        if self.error.is_none() && (self.wall_time.len() != self.k || self.max_bond.len() != self.k)
        {
            return Err(Error::Dimension(format!(
                "record for k = {} has {} times and {} bonds",
                self.k,
                self.wall_time.len(),
                self.max_bond.len()
            )));
        }
        Ok(())
    }
}

/// Slope of the least-squares line through `(i, y_i)`; zero for fewer than
/// two points.
pub fn least_squares_slope(y: &[f64]) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let xm = (n - 1) as f64 / 2.0;
    let ym = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &v) in y.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (v - ym);
        sxx += dx * dx;
    }
    sxy / sxx
}

fn trajectories_differ(a: &[Matrix], b: &[Matrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max)
}

fn run_case(case: &BenchCase, opts: &BenchOptions) -> Vec<BenchRecord> {
    let prepared = (|| {
        let grid = TimeGrid::new(case.dt, case.k)?;
        let kernel = memory_kernel(&grid, &case.bath)?;
        let bset = influence_tensors(&kernel, &[0.5, -0.5])?;
        let sys = SystemSpec::spin_boson(Matrix::diag(&[C64::new(1.0, 0.0), ZERO]))?;
        Ok::<_, Error>((grid, bset, sys))
    })();
    let (grid, bset, sys) = match prepared {
        Ok(p) => p,
        Err(e) => {
            return opts
                .schemes
                .iter()
                .map(|&s| BenchRecord::failed(case, s, &e))
                .collect()
        }
    };

    let mut records = Vec::new();
    let mut trajectories = Vec::new();
    for &scheme in &opts.schemes {
        let run = (|| {
            if opts.warmup {
                contract(scheme, &bset, &grid, case.lambda_c)?;
            }
            let start = Instant::now();
            let mps = contract(scheme, &bset, &grid, case.lambda_c)?;
            let elapsed = start.elapsed().as_secs_f64();
            let process = Process::new(&mps, &sys)?;
            let traj = density_trajectory(&process, case.k, &BreakPolicy::None)?;
            Ok::<_, Error>((mps.stats.clone(), elapsed, traj))
        })();
        match run {
            Ok((stats, elapsed, traj)) => {
                records.push(BenchRecord {
                    scheme,
                    k: case.k,
                    dt: case.dt,
                    lambda_c: case.lambda_c,
                    alpha: case.bath.alpha,
                    omega_c: case.bath.omega_c,
                    nu: case.bath.nu,
                    temperature: case.bath.temperature(),
                    wall_time: stats.wall_time,
                    max_bond: stats.max_bond,
                    total_time: elapsed,
                    discarded_weight: stats.discarded_weight,
                    cross_scheme_diff: None,
                    valid: true,
                    error: None,
                });
                trajectories.push(Some(traj));
            }
            Err(e) => {
                log::warn!(
                    "{} contraction failed for k = {}: {e}",
                    scheme.name(),
                    case.k
                );
                records.push(BenchRecord::failed(case, scheme, &e));
                trajectories.push(None);
            }
        }
    }

    // Every record is compared against the first successful run of another
    // scheme.
    for i in 0..records.len() {
        let Some(mine) = &trajectories[i] else {
            continue;
        };
        let other = (0..records.len())
            .filter(|&j| records[j].scheme != records[i].scheme)
            .find_map(|j| trajectories[j].as_ref());
        if let Some(other) = other {
            let diff = trajectories_differ(mine, other);
            records[i].cross_scheme_diff = Some(diff);
            records[i].valid = diff <= opts.tolerance;
        }
    }
    records
}

/// Times every case under every scheme in `opts`. Failures are recorded in
/// the affected records and do not stop the sweep.
pub fn benchmark(cases: &[BenchCase], opts: &BenchOptions) -> Vec<BenchRecord> {
    if opts.parallel {
        cases
            .par_iter()
            .flat_map_iter(|c| run_case(c, opts))
            .collect()
    } else {
        cases.iter().flat_map(|c| run_case(c, opts)).collect()
    }
}

/// One JSON object per line.
pub fn write_records_jsonl<W: Write>(records: &[BenchRecord], mut w: W) -> Result<()> {
    for r in records {
        r.check()?;
        serde_json::to_writer(&mut w, r).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w)?;
    }
    Ok(())
}

/// Summary table without the per-iteration columns.
pub fn write_records_csv<W: Write>(records: &[BenchRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "scheme",
        "k",
        "dt",
        "lambda_c",
        "alpha",
        "omega_c",
        "nu",
        "temperature",
        "total_time",
        "peak_bond",
        "time_slope",
        "discarded_weight",
        "cross_scheme_diff",
        "valid",
        "error",
    ])?;
    for r in records {
        r.check()?;
        out.write_record([
            r.scheme.name().to_string(),
            r.k.to_string(),
            r.dt.to_string(),
            r.lambda_c.to_string(),
            r.alpha.to_string(),
            r.omega_c.to_string(),
            r.nu.to_string(),
            r.temperature.to_string(),
            r.total_time.to_string(),
            r.max_bond.iter().max().copied().unwrap_or(0).to_string(),
            r.time_slope(0).to_string(),
            r.discarded_weight.to_string(),
            r.cross_scheme_diff
                .map(|d| d.to_string())
                .unwrap_or_default(),
            r.valid.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

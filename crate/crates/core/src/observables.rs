//! Two-time correlations, steady-state detection and emission spectra.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{sigma_minus, sigma_plus, BreakPolicy, Intervention, Process};
use crate::tensor::{Matrix, C64, ZERO};

/// Fraction of trailing samples averaged for `g¹(∞)`.
pub const TRAILING_FRACTION: f64 = 0.1;
pub const STEADY_WINDOW: usize = 20;
pub const STEADY_THRESHOLD: f64 = 1e-5;

/// `g¹(τ) = ⟨σ⁺(t + τ) σ(t)⟩` sampled on the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub t_anchor: f64,
    pub tau: Vec<f64>,
    pub values: Vec<C64>,
    pub g1_infinity: C64,
}

impl CorrelationSeries {
    pub fn new(t_anchor: f64, tau: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        if tau.len() != values.len() || tau.is_empty() {
            return Err(Error::Dimension(format!(
                "{} delays for {} samples",
                tau.len(),
                values.len()
            )));
        }
        if tau[0] != 0.0 || tau.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("delays must increase strictly from 0".into()));
        }
        let mut s = CorrelationSeries {
            t_anchor,
            tau,
            values,
            g1_infinity: ZERO,
        };
        s.g1_infinity = s.trailing_mean(TRAILING_FRACTION);
        Ok(s)
    }

    /// Mean of the last `fraction` of the samples (at least one).
    pub fn trailing_mean(&self, fraction: f64) -> C64 {
        let n = self.values.len();
        let m = ((n as f64 * fraction).round() as usize).clamp(1, n);
        self.values[n - m..].iter().sum::<C64>() / m as f64
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["tau", "re_g1", "im_g1"])?;
        for (t, g) in self.tau.iter().zip(&self.values) {
            out.write_record([t.to_string(), format!("{:e}", g.re), format!("{:e}", g.im)])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn trace_with(op: &Matrix, rho: &Matrix) -> C64 {
    let d = rho.rows();
    let mut acc = ZERO;
    for s in 0..d {
        for r in 0..d {
            acc += op[(r, s)] * rho[(s, r)];
        }
    }
    acc
}

/// `g¹(m δt)` for `m = 0..=n_tau`, lowering operator at `anchor` and
/// raising operator `m` steps later, in one pass over the network.
pub fn g1_series(
    process: &Process<'_>,
    anchor: usize,
    n_tau: usize,
    policy: &BreakPolicy,
) -> Result<CorrelationSeries> {
    if process.sys.d != 2 {
        return Err(Error::Unsupported(
            "g1 uses two-level ladder operators".into(),
        ));
    }
    let end = anchor + n_tau;
    if end > process.horizon() {
        return Err(Error::Domain(format!(
            "anchor {anchor} plus {n_tau} delays exceeds the {}-step network",
            process.horizon()
        )));
    }
    let (lower, raise) = (sigma_minus(), sigma_plus());
    let insert = Intervention::left(&lower)?;
    let mut cur = process.cursor();
    for _ in 0..anchor {
        cur.apply_policy(policy);
        cur.step(&Intervention::Identity)?;
    }
    cur.apply_policy(policy);
    let at_anchor = cur.reduced();
    let mut values = Vec::with_capacity(n_tau + 1);
    values.push(trace_with(&raise.matmul(&lower)?, &at_anchor));
    for m in 1..=n_tau {
        if m > 1 {
            cur.apply_policy(policy);
        }
        let op = if m == 1 {
            &insert
        } else {
            &Intervention::Identity
        };
        cur.step(op)?;
        values.push(trace_with(&raise, &cur.reduced()));
    }
    let dt = process.dt();
    let tau = (0..=n_tau).map(|m| m as f64 * dt).collect();
    CorrelationSeries::new(anchor as f64 * dt, tau, values)
}

/// Outcome of the steady-state search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SteadyState {
    pub step: usize,
    /// False when the trajectory never settled; `step` is then the last one.
    pub converged: bool,
}

/// Earliest step from which `ρ` changes by less than `STEADY_THRESHOLD`
/// elementwise over the following `STEADY_WINDOW` steps.
pub fn steady_state_anchor(traj: &[Matrix]) -> Result<SteadyState> {
    steady_state_anchor_with(traj, STEADY_WINDOW, STEADY_THRESHOLD)
}

pub fn steady_state_anchor_with(
    traj: &[Matrix],
    window: usize,
    threshold: f64,
) -> Result<SteadyState> {
    if traj.len() < 10 {
        return Err(Error::Domain(format!(
            "trajectory of {} states is too short",
            traj.len()
        )));
    }
    let last = traj.len() - 1;
    for s in 0..traj.len().saturating_sub(window) {
        let settled = traj[s + 1..=s + window]
            .iter()
            .all(|rho| rho.max_abs_diff(&traj[s]) < threshold);
        if settled {
            return Ok(SteadyState {
                step: s,
                converged: true,
            });
        }
    }
    log::warn!("no steady state within {} steps", traj.len());
    Ok(SteadyState {
        step: last,
        converged: false,
    })
}

/// `S(Δω)` on a detuning grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub detunings: Vec<f64>,
    pub values: Vec<f64>,
    /// Exponential apodization rate applied to the delay window.
    pub window_rate: f64,
}

/// `S(Δω) = Re Σ_trap (g¹(τ) − g¹(∞)) e^{−γ_w τ} e^{−iΔωτ} δτ` over the
/// sampled window.
pub fn emission_spectrum(
    series: &CorrelationSeries,
    detunings: &[f64],
    window_rate: f64,
) -> Result<Spectrum> {
    let n = series.tau.len();
    if n < 2 {
        return Err(Error::Domain("spectrum needs at least two delays".into()));
    }
    if detunings.is_empty() {
        return Err(Error::Domain("empty detuning grid".into()));
    }
    if !(window_rate >= 0.0) {
        return Err(Error::Domain(format!(
            "window rate must be >= 0, got {window_rate}"
        )));
    }
    let dtau = series.tau[1] - series.tau[0];
    let uniform = series
        .tau
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dtau).abs() <= 1e-9 * dtau);
    if !uniform {
        return Err(Error::Domain("spectrum needs a uniform delay grid".into()));
    }
    let shifted: Vec<C64> = series
        .tau
        .iter()
        .zip(&series.values)
        .map(|(&t, &g)| (g - series.g1_infinity) * (-window_rate * t).exp())
        .collect();
    let values = detunings
        .iter()
        .map(|&w| {
            let mut acc = ZERO;
            for (i, (&t, &g)) in series.tau.iter().zip(&shifted).enumerate() {
                let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                acc += g * C64::from_polar(end, -w * t);
            }
            (acc * dtau).re
        })
        .collect();
    Ok(Spectrum {
        detunings: detunings.to_vec(),
        values,
        window_rate,
    })
}

impl Spectrum {
    /// Detuning of the largest value.
    pub fn peak(&self) -> f64 {
        let i = (0..self.values.len())
            .max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .unwrap_or(0);
        self.detunings[i]
    }

    /// Trapezoidal integral of `f(S)` over the grid points with `keep(Δω)`.
    fn integrate(&self, keep: impl Fn(f64) -> bool, f: impl Fn(f64) -> f64) -> f64 {
        self.detunings
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(w, v)| {
                let a = if keep(w[0]) { f(v[0]) } else { 0.0 };
                let b = if keep(w[1]) { f(v[1]) } else { 0.0 };
                0.5 * (a + b) * (w[1] - w[0])
            })
            .sum()
    }

    /// `∫_{Δω > c+δ} S − ∫_{Δω < c−δ} S`.
    pub fn sideband_asymmetry(&self, center: f64, delta: f64) -> f64 {
        self.integrate(|w| w > center + delta, |s| s)
            - self.integrate(|w| w < center - delta, |s| s)
    }

    /// Share of `∫|S|` within `half_width` of `center`.
    pub fn peak_weight_fraction(&self, center: f64, half_width: f64) -> f64 {
        let total = self.integrate(|_| true, f64::abs);
        if total == 0.0 {
            return 0.0;
        }
        self.integrate(|w| (w - center).abs() <= half_width, f64::abs) / total
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["detuning", "s"])?;
        for (d, s) in self.detunings.iter().zip(&self.values) {
            out.write_record([d.to_string(), format!("{s:e}")])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `n` detunings evenly spaced over `[lo, hi]`.
pub fn detuning_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

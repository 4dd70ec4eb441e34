//! Gaussian bosonic bath: spectral density, auto-correlation function, the
//! discretized memory kernel and the influence tensors built from it.

mod correlation;
mod kernel;
mod special;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::C64;

pub use correlation::{correlation, correlation_analytic_ohmic, correlation_quadrature};
pub use kernel::{
    compound_index, influence_tensors, memory_kernel, split_compound, write_influence_csv,
    write_kernel_csv, InfluenceTensorSet, MemoryKernel, EXPONENT_GUARD,
};
pub use special::polygamma1;

/// Quadrature settings shared by the frequency integral and the time-cell
/// integrals of the memory kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadControls {
    /// Gauss–Legendre nodes per panel in the time-cell integrals.
    pub nodes: usize,
    /// Panels per half-cell in the time-cell integrals.
    pub panels: usize,
    /// Relative tolerance of the adaptive frequency integral.
    pub rel_tol: f64,
    /// Panel budget of the adaptive frequency integral.
    pub max_panels: usize,
}

impl Default for QuadControls {
    fn default() -> Self {
        QuadControls {
            nodes: 24,
            panels: 1,
            rel_tol: 1e-12,
            max_panels: 20_000,
        }
    }
}

/// One discrete bath mode, coupling `g (a + a†)`-style with strength `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMode {
    pub g: f64,
    pub omega: f64,
}

/// Bath parameters. Frequencies are in units of the system frequency Ω and
/// `beta` in 1/Ω; `beta = ∞` is zero temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct BathSpec {
    pub alpha: f64,
    pub omega_c: f64,
    pub nu: f64,
    pub beta: f64,
    /// When present the continuum is replaced by these modes.
    pub modes: Option<Vec<DiscreteMode>>,
    pub quad: QuadControls,
}

impl BathSpec {
    /// Ohmic-family continuum `J(ω) = (α ω_c/2)(ω/ω_c)^ν e^{-ω/ω_c}`.
    pub fn continuum(alpha: f64, omega_c: f64, nu: f64, beta: f64) -> Result<Self> {
        let spec = BathSpec {
            alpha,
            omega_c,
            nu,
            beta,
            modes: None,
            quad: QuadControls::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ohmic(alpha: f64, omega_c: f64, beta: f64) -> Result<Self> {
        Self::continuum(alpha, omega_c, 1.0, beta)
    }

    /// Finite set of modes at inverse temperature `beta`.
    pub fn discrete(modes: Vec<DiscreteMode>, beta: f64) -> Result<Self> {
        let spec = BathSpec {
            alpha: 1.0,
            omega_c: 1.0,
            nu: 1.0,
            beta,
            modes: Some(modes),
            quad: QuadControls::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_quad(mut self, quad: QuadControls) -> Self {
        self.quad = quad;
        self
    }

    /// Temperature `T = 1/β` (zero for `β = ∞`).
    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.beta.is_infinite()
    }

    /// True when no coupling is present at all.
    pub fn is_decoupled(&self) -> bool {
        match &self.modes {
            Some(m) => m.iter().all(|m| m.g == 0.0),
            None => self.alpha == 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::Domain(format!(
                "beta must be > 0, got {}",
                self.beta
            )));
        }
        match &self.modes {
            Some(modes) => {
                if let Some(m) = modes.iter().find(|m| !(m.omega > 0.0) || !m.g.is_finite()) {
                    return Err(Error::Domain(format!(
                        "discrete mode needs omega > 0 and finite g, got {m:?}"
                    )));
                }
            }
            None => {
                if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
                    return Err(Error::Domain(format!(
                        "alpha must be >= 0, got {}",
                        self.alpha
                    )));
                }
                if !(self.omega_c > 0.0) || !self.omega_c.is_finite() {
                    return Err(Error::Domain(format!(
                        "omega_c must be > 0, got {}",
                        self.omega_c
                    )));
                }
                if !(self.nu > 0.0) || !self.nu.is_finite() {
                    return Err(Error::Domain(format!("nu must be > 0, got {}", self.nu)));
                }
            }
        }
        if self.quad.nodes == 0 || self.quad.panels == 0 || !(self.quad.rel_tol > 0.0) {
            return Err(Error::Domain(format!(
                "bad quadrature controls {:?}",
                self.quad
            )));
        }
        Ok(())
    }

    /// Per-mode `(ω_n, |g_n|²)` weights of a discrete bath.
    pub fn mode_weights(&self) -> Option<Vec<(f64, f64)>> {
        self.modes
            .as_ref()
            .map(|m| m.iter().map(|m| (m.omega, m.g * m.g)).collect())
    }
}

/// Evenly spaced time grid of `k` steps of width `dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub k: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, k: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
        }
        if k == 0 {
            return Err(Error::Domain("grid needs at least one step".into()));
        }
        Ok(TimeGrid { dt, k })
    }

    pub fn t_max(&self) -> f64 {
        self.dt * self.k as f64
    }

    pub fn time(&self, step: usize) -> f64 {
        self.dt * step as f64
    }
}

/// Continuum spectral density `J(ω) = (α ω_c/2)(ω/ω_c)^ν e^{-ω/ω_c}`.
///
/// A discrete bath has no pointwise density; use [`BathSpec::mode_weights`].
pub fn spectral_density(omega: f64, spec: &BathSpec) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::Domain(format!(
            "spectral density needs omega >= 0, got {omega}"
        )));
    }
    if spec.modes.is_some() {
        return Err(Error::Unsupported(
            "discrete bath: query mode_weights() for the delta-comb weights".into(),
        ));
    }
    if omega == 0.0 {
        return Ok(0.0);
    }
    let x = omega / spec.omega_c;
    Ok(0.5 * spec.alpha * spec.omega_c * x.powf(spec.nu) * (-x).exp())
}

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

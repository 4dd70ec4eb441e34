use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::{integrate_adaptive, AdaptiveTol};
use crate::tensor::{C64, ZERO};

use super::{c, polygamma1, BathSpec};

/// Bath auto-correlation `C(t)`, choosing the cheapest exact route: the
/// mode sum for discrete baths, the closed Ohmic form when `ν = 1` and the
/// temperature is finite, numerical quadrature otherwise.
pub fn correlation(t: f64, spec: &BathSpec) -> Result<C64> {
    if spec.modes.is_none() && spec.nu == 1.0 && spec.beta.is_finite() {
        correlation_analytic_ohmic(t, spec)
    } else {
        correlation_quadrature(t, spec)
    }
}

/// `C(t)` from the frequency integral
/// `(1/π) ∫ J(ω) [coth(βω/2) cos ωt − i sin ωt] dω`.
///
/// The integrand is split as `J e^{-iωt} + 2 J n(ω) cos ωt` with `n` the Bose
/// occupation. The first (vacuum) piece is integrated along the steepest
/// descent ray once `ω_c|t|` is large, which removes the oscillation
/// entirely. The second piece lives on the thermal scale and is integrated on
/// the real axis. A discrete bath collapses to the mode sum
/// `Σ |g|² [coth(βω/2) cos ωt − i sin ωt]`.
pub fn correlation_quadrature(t: f64, spec: &BathSpec) -> Result<C64> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("correlation at non-finite time {t}")));
    }
    if let Some(weights) = spec.mode_weights() {
        return Ok(weights
            .iter()
            .map(|&(w, g2)| {
                let (s, co) = (w * t).sin_cos();
                c(g2 * coth_half(spec.beta * w) * co, -g2 * s)
            })
            .sum());
    }
    if spec.alpha == 0.0 {
        return Ok(ZERO);
    }
    let vacuum = vacuum_part(t, spec)?;
    if spec.is_zero_temperature() {
        return Ok(vacuum);
    }
    let thermal = thermal_part(t, spec, vacuum.norm())?;
    Ok(vacuum + thermal)
}

/// `coth(x/2)`, equal to one at `x = ∞`.
fn coth_half(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else {
        1.0 + 2.0 / x.exp_m1()
    }
}

fn tol(spec: &BathSpec, abs: f64) -> AdaptiveTol {
    AdaptiveTol {
        abs,
        rel: spec.quad.rel_tol,
        max_panels: spec.quad.max_panels,
    }
}

/// Geometric breakpoints `0, s/16, …, s·2^6` followed by the tail end.
fn breakpoints(scale: f64, upper: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut x = scale / 16.0;
    while x < upper {
        pts.push(x);
        x *= 2.0;
    }
    pts.push(upper);
    pts
}

/// Splits every panel of `pts` so that none spans more than a few periods
/// of an oscillation at angular frequency `t`.
fn refine_for_oscillation(pts: Vec<f64>, t: f64) -> Vec<f64> {
    let period = 2.0 * PI / t.abs().max(1e-300);
    let max_width = 4.0 * period;
    let mut out = vec![pts[0]];
    for w in pts.windows(2) {
        let n = (((w[1] - w[0]) / max_width).ceil() as usize).clamp(1, 4096);
        let h = (w[1] - w[0]) / n as f64;
        for j in 1..n {
            out.push(w[0] + h * j as f64);
        }
        out.push(w[1]);
    }
    out
}

/// `(1/π) ∫_0^∞ J(ω) e^{-iωt} dω`.
fn vacuum_part(t: f64, spec: &BathSpec) -> Result<C64> {
    let (alpha, wc, nu) = (spec.alpha, spec.omega_c, spec.nu);
    let prefactor = 0.5 * alpha * wc * wc.powf(-nu) / PI;
    let reach = 60.0 + 3.0 * nu;
    if wc * t.abs() <= 2.0 {
        let upper = reach * wc;
        let pts = refine_for_oscillation(breakpoints(wc, upper), t);
        let r = integrate_adaptive(
            |w| {
                if w == 0.0 {
                    return ZERO;
                }
                c(0.0, -w * t).exp() * (w.powf(nu) * (-w / wc).exp())
            },
            &pts,
            tol(spec, 1e-300),
        )?;
        Ok(r.value * prefactor)
    } else {
        // ∫ ω^ν e^{-aω} dω with a = 1/ω_c + it; rotate ω = u e^{-iφ}, φ = arg a
        let a = c(1.0 / wc, t);
        let (modulus, phase) = a.to_polar();
        let upper = reach / modulus;
        let r = integrate_adaptive(
            |u| {
                if u == 0.0 {
                    return ZERO;
                }
                c(u.powf(nu) * (-modulus * u).exp(), 0.0)
            },
            &breakpoints(1.0 / modulus, upper),
            tol(spec, 1e-300),
        )?;
        Ok(r.value * c(0.0, -phase * (nu + 1.0)).exp() * prefactor)
    }
}

/// `(2/π) ∫_0^∞ J(ω) n(ω) cos ωt dω`, `n = 1/(e^{βω} − 1)`.
fn thermal_part(t: f64, spec: &BathSpec, vacuum_scale: f64) -> Result<C64> {
    let (alpha, wc, nu, beta) = (spec.alpha, spec.omega_c, spec.nu, spec.beta);
    let scale = 1.0 / (beta + 1.0 / wc);
    let upper = (60.0 + 3.0 * nu) * scale;
    let pts = refine_for_oscillation(breakpoints(scale, upper), t);
    let abs = (spec.quad.rel_tol * 1e-3 * vacuum_scale).max(1e-300);
    let r = integrate_adaptive(
        |w| {
            if w == 0.0 {
                return ZERO;
            }
            let x = w / wc;
            let j = 0.5 * alpha * wc * x.powf(nu) * (-x).exp();
            c(j * (w * t).cos() / (beta * w).exp_m1(), 0.0)
        },
        &pts,
        tol(spec, abs),
    )?;
    Ok(r.value * (2.0 / PI))
}

/// Closed-form Ohmic (`ν = 1`) correlation at finite temperature,
///
/// `C(t) = (αω_c²/2π) [ (x² − 1)/(x² + 1)² + 2/(βω_c)² Re ψ⁽¹⁾((1 − ix)/(βω_c))
///          − 2ix/(x² + 1)² ]`, `x = ω_c t`.
pub fn correlation_analytic_ohmic(t: f64, spec: &BathSpec) -> Result<C64> {
    if spec.modes.is_some() {
        return Err(Error::Unsupported(
            "closed form needs the continuum bath".into(),
        ));
    }
    if spec.nu != 1.0 {
        return Err(Error::Unsupported(format!(
            "closed form exists only for nu = 1, got {}",
            spec.nu
        )));
    }
    if !spec.beta.is_finite() {
        return Err(Error::Unsupported(
            "closed form needs finite beta; use correlation_quadrature at zero temperature".into(),
        ));
    }
    if !t.is_finite() {
        return Err(Error::Domain(format!("correlation at non-finite time {t}")));
    }
    let (alpha, wc, beta) = (spec.alpha, spec.omega_c, spec.beta);
    let x = wc * t;
    let den = (x * x + 1.0).powi(2);
    let bw = beta * wc;
    let psi = polygamma1(c(1.0, -x) / bw)?;
    let re = (x * x - 1.0) / den + 2.0 / (bw * bw) * psi.re;
    let im = -2.0 * x / den;
    Ok(c(re, im) * (alpha * wc * wc / (2.0 * PI)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{DiscreteMode, QuadControls};

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn discrete_mode_closed_form() {
        let (g, w, beta) = (0.3, 1.7, 2.0);
        let spec = BathSpec::discrete(vec![DiscreteMode { g, omega: w }], beta).unwrap();
        for t in [0.0, 0.4, -2.5] {
            let got = correlation_quadrature(t, &spec).unwrap();
            let coth = 1.0 / (beta * w / 2.0).tanh();
            let want = c(g * g * coth * (w * t).cos(), -g * g * (w * t).sin());
            assert!((got - want).norm() < 1e-15);
        }
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let spec = BathSpec::ohmic(0.7, 10.0, 100.0).unwrap();
        for t in [0.0, 0.01, 0.1, 0.25, 1.0, 3.0, 10.0] {
            let q = correlation_quadrature(t, &spec).unwrap();
            let a = correlation_analytic_ohmic(t, &spec).unwrap();
            assert!(rel(q, a) < 1e-8, "t={t}: {q} vs {a}");
        }
        let hot = BathSpec::ohmic(0.3, 2.0, 0.5).unwrap();
        for t in [0.0, 0.7, 4.0] {
            let q = correlation_quadrature(t, &hot).unwrap();
            let a = correlation_analytic_ohmic(t, &hot).unwrap();
            assert!(rel(q, a) < 1e-8, "t={t}: {q} vs {a}");
        }
    }

    #[test]
    fn zero_temperature_ohmic_is_rational() {
        // β = ∞: C(t) = (αω_c²/2π) / (1 + iω_c t)²
        let spec = BathSpec::ohmic(0.5, 4.0, f64::INFINITY).unwrap();
        for t in [0.0, 0.3, 2.0, -7.0] {
            let got = correlation_quadrature(t, &spec).unwrap();
            let want = c(1.0, 4.0 * t).powi(-2) * (0.5 * 16.0 / (2.0 * PI));
            assert!(rel(got, want) < 1e-10, "t={t}: {got} vs {want}");
        }
    }

    #[test]
    fn conjugate_symmetry_in_time() {
        let sub = BathSpec::continuum(0.2, 3.0, 0.5, 5.0).unwrap();
        let ohm = BathSpec::ohmic(0.7, 10.0, 100.0).unwrap();
        for t in [0.05, 0.9, 6.0] {
            for spec in [&sub, &ohm] {
                let a = correlation(t, spec).unwrap();
                let b = correlation(-t, spec).unwrap();
                assert!((a - b.conj()).norm() <= 1e-12 * a.norm());
            }
        }
    }

    #[test]
    fn analytic_is_real_at_origin() {
        let spec = BathSpec::ohmic(0.7, 10.0, 100.0).unwrap();
        assert_eq!(correlation_analytic_ohmic(0.0, &spec).unwrap().im, 0.0);
    }

    #[test]
    fn large_time_power_law() {
        // |C| → α/(π β ω_c t²) once ω_c t ≫ 1 and t ≫ β
        let spec = BathSpec::ohmic(0.7, 10.0, 1.0).unwrap();
        let t = 100.0;
        let got = correlation_analytic_ohmic(t, &spec).unwrap().norm();
        let want = 0.7 / (PI * 1.0 * 10.0 * t * t);
        assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
    }

    #[test]
    fn analytic_rejects_unsupported() {
        let sub = BathSpec::continuum(0.2, 3.0, 0.5, 5.0).unwrap();
        assert!(matches!(
            correlation_analytic_ohmic(0.1, &sub),
            Err(Error::Unsupported(_))
        ));
        let cold = BathSpec::ohmic(0.2, 3.0, f64::INFINITY).unwrap();
        assert!(matches!(
            correlation_analytic_ohmic(0.1, &cold),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn starved_quadrature_reports_achieved_error() {
        let spec = BathSpec::continuum(0.2, 3.0, 0.5, 5.0)
            .unwrap()
            .with_quad(QuadControls {
                max_panels: 4,
                rel_tol: 1e-14,
                ..QuadControls::default()
            });
        assert!(matches!(
            correlation_quadrature(0.3, &spec),
            Err(Error::Quadrature { .. })
        ));
    }
}

//! Fixed-order Gauss–Legendre rules and an adaptive Gauss–Kronrod integrator
//! for complex-valued integrands on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::tensor::{C64, ZERO};

/// Gauss–Legendre rule on the reference interval [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over `[a, b]` split into `panels` equal sub-intervals.
    pub fn integrate<F: FnMut(f64) -> C64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> C64 {
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        let mut total = ZERO;
        for p in 0..panels {
            let lo = a + p as f64 * width;
            let c = lo + 0.5 * width;
            let h = 0.5 * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                total += f(c + h * x) * (w * h);
            }
        }
        total
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[allow(clippy::excessive_precision)]
const XGK21: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WG10: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[allow(clippy::excessive_precision)]
const WGK21: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

/// One Kronrod panel: (estimate, error estimate).
fn gk21<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK21[10];
    let mut resg = ZERO;
    let mut resabs = fc.norm() * WGK21[10];
    let mut fv = [(ZERO, ZERO); 10];
    for j in 0..10 {
        let x = h * XGK21[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        fv[j] = (f1, f2);
        resk += (f1 + f2) * WGK21[j];
        resabs += (f1.norm() + f2.norm()) * WGK21[j];
        if j % 2 == 1 {
            resg += (f1 + f2) * WG10[j / 2];
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK21[10] * (fc - mean).norm();
    for j in 0..10 {
        resasc += WGK21[j] * ((fv[j].0 - mean).norm() + (fv[j].1 - mean).norm());
    }
    let h_abs = h.abs();
    let resasc = resasc * h_abs;
    let resabs = resabs * h_abs;
    let mut err = ((resk - resg) * h).norm();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let eps = 50.0 * f64::EPSILON;
    if resabs > f64::MIN_POSITIVE / eps {
        err = err.max(eps * resabs);
    }
    (resk * h, err)
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: C64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
    pub panels: usize,
}

/// Tolerances for [`integrate_adaptive`].
#[derive(Clone, Copy, Debug)]
pub struct AdaptiveTol {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Default for AdaptiveTol {
    fn default() -> Self {
        AdaptiveTol {
            abs: 1e-15,
            rel: 1e-12,
            max_panels: 20_000,
        }
    }
}

/// Globally adaptive 21-point Gauss–Kronrod integration of `f` over the
/// breakpoints `points` (ascending, at least two).
pub fn integrate_adaptive<F: FnMut(f64) -> C64>(
    mut f: F,
    points: &[f64],
    tol: AdaptiveTol,
) -> Result<QuadResult> {
    if points.len() < 2 {
        return Err(Error::Domain("need at least two breakpoints".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut total = ZERO;
    let mut total_err = 0.0;
    for w in points.windows(2) {
        if !(w[1] > w[0]) {
            if w[1] == w[0] {
                continue;
            }
            return Err(Error::Domain(format!(
                "breakpoints not ascending: {:?}",
                points
            )));
        }
        let (v, e) = gk21(&mut f, w[0], w[1]);
        total += v;
        total_err += e;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            err: e,
        });
    }
    loop {
        if !(total.re.is_finite() && total.im.is_finite()) {
            return Err(Error::Numeric("non-finite integrand".into()));
        }
        let target = tol.abs.max(tol.rel * total.norm());
        if total_err <= target {
            break;
        }
        if heap.len() >= tol.max_panels {
            return Err(Error::Quadrature {
                achieved: total_err,
                requested: target,
            });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine resolution
            heap.push(worst);
            return Err(Error::Quadrature {
                achieved: total_err,
                requested: target,
            });
        }
        let (v1, e1) = gk21(&mut f, worst.a, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
        });
    }
    // resum to shed accumulated rounding from the running updates
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.err).sum();
    Ok(QuadResult {
        value,
        error,
        panels: heap.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(24);
        let sw: f64 = gl.weights().iter().sum();
        assert!((sw - 2.0).abs() < 1e-14);
        // degree 47 is the highest exactly integrated
        let v = gl.integrate(0.0, 1.0, 1, |x| C64::new(x.powi(46), 0.0));
        assert!((v.re - 1.0 / 47.0).abs() < 1e-15);
        let v = gl.integrate(-1.0, 2.0, 3, |x| C64::new(x * x, 0.0));
        assert!((v.re - 3.0).abs() < 1e-14);
    }

    #[test]
    fn odd_order_has_center_node() {
        let gl = GaussLegendre::new(5);
        assert_eq!(gl.nodes()[2], 0.0);
        assert!((gl.weights()[2] - 128.0 / 225.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_oscillatory() {
        // ∫_0^π e^{i 20 x} x dx
        let w = 20.0;
        let r = integrate_adaptive(
            |x| C64::new(0.0, w * x).exp() * x,
            &[0.0, std::f64::consts::PI],
            AdaptiveTol::default(),
        )
        .unwrap();
        let pi = std::f64::consts::PI;
        let i = C64::new(0.0, 1.0);
        let exact = (i * w * pi).exp() * (pi / (i * w)) + ((i * w * pi).exp() - 1.0) / (w * w);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn adaptive_endpoint_singularity() {
        let r = integrate_adaptive(
            |x| C64::new(x.sqrt().recip(), 0.0),
            &[0.0, 1.0],
            AdaptiveTol {
                abs: 1e-10,
                rel: 1e-10,
                max_panels: 5000,
            },
        )
        .unwrap();
        assert!((r.value.re - 2.0).abs() < 1e-9);
    }

    #[test]
    fn adaptive_reports_failure() {
        let r = integrate_adaptive(
            |x| C64::new(1.0 / x, 0.0),
            &[0.0, 1.0],
            AdaptiveTol {
                abs: 1e-12,
                rel: 1e-12,
                max_panels: 50,
            },
        );
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}

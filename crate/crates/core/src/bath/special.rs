use crate::error::{Error, Result};
use crate::tensor::{C64, ONE};

/// Bernoulli numbers B_2, B_4, …, B_14.
const BERNOULLI_EVEN: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

/// Real part beyond which the asymptotic series is used directly.
const ASYMPTOTIC_RE: f64 = 16.0;

/// Trigamma function ψ⁽¹⁾(z) = Σ_{n≥0} 1/(z+n)² for complex `z`.
///
/// Shifts `z` upward with ψ⁽¹⁾(z) = ψ⁽¹⁾(z+1) + 1/z² until Re z ≥ 16, then
/// sums the asymptotic series 1/z + 1/(2z²) + Σ B_{2k}/z^{2k+1}.
pub fn polygamma1(z: C64) -> Result<C64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!(
            "trigamma of non-finite argument {z}"
        )));
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        return Err(Error::Domain(format!("trigamma pole at {}", z.re)));
    }
    let mut acc = C64::new(0.0, 0.0);
    let mut w = z;
    while w.re < ASYMPTOTIC_RE {
        acc += (w * w).inv();
        w += ONE;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut term = inv * inv2;
    let mut series = inv + inv2 * 0.5;
    for b in BERNOULLI_EVEN {
        series += term * b;
        term *= inv2;
    }
    Ok(acc + series)
}

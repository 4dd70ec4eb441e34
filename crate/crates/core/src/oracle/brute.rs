use crate::bath::InfluenceTensorSet;
use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, C64, ONE};

/// Largest dense influence functional the oracle will build.
pub const BRUTE_FORCE_LIMIT: usize = 1 << 20;

/// `F^{α_k…α_1} = Π_{i ≥ j} b_{i−j}[α_i, α_j]` evaluated entry by entry.
/// Axis `j` of the result is `α_{j+1}`.
pub fn brute_force_influence(bset: &InfluenceTensorSet, k: usize) -> Result<DenseTensor> {
    if k == 0 || k > bset.b.len() {
        return Err(Error::Domain(format!(
            "k = {k} needs 1 <= k <= {} (number of influence tensors)",
            bset.b.len()
        )));
    }
    let dd = bset.dim();
    let size = (dd as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if size > BRUTE_FORCE_LIMIT as u128 {
        return Err(Error::SizeGuard(format!(
            "{dd}^{k} entries exceed {BRUTE_FORCE_LIMIT}"
        )));
    }
    Ok(DenseTensor::from_fn(vec![dd; k], |legs| {
        let mut v: C64 = ONE;
        for i in 0..k {
            for j in 0..=i {
                v *= bset.b[i - j][(legs[i], legs[j])];
            }
        }
        v
    }))
}

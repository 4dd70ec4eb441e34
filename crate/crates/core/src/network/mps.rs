use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{scale_columns, scale_rows, svd_truncate, DenseTensor, Matrix, C64, ONE};

/// One chain tensor, row-major over `(left bond, physical, right bond)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsSite {
    pub left: usize,
    pub phys: usize,
    pub right: usize,
    pub data: Vec<C64>,
}

impl MpsSite {
    pub fn new(left: usize, phys: usize, right: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != left * phys * right {
            return Err(Error::Dimension(format!(
                "site {left}x{phys}x{right} given {} values",
                data.len()
            )));
        }
        Ok(MpsSite {
            left,
            phys,
            right,
            data,
        })
    }

    /// Bond-1 site with every physical entry equal to one.
    pub fn ones(phys: usize) -> Self {
        MpsSite {
            left: 1,
            phys,
            right: 1,
            data: vec![ONE; phys],
        }
    }

    #[inline]
    pub fn get(&self, l: usize, p: usize, r: usize) -> C64 {
        self.data[(l * self.phys + p) * self.right + r]
    }

    /// The `left × right` matrix at physical index `p`.
    pub fn slice(&self, p: usize) -> Matrix {
        Matrix::from_fn(self.left, self.right, |l, r| self.get(l, p, r))
    }

    fn as_left_matrix(&self) -> Matrix {
        Matrix::from_vec(self.left, self.phys * self.right, self.data.clone())
            .expect("site shape is consistent")
    }

    fn as_right_matrix(&self) -> Matrix {
        Matrix::from_vec(self.left * self.phys, self.right, self.data.clone())
            .expect("site shape is consistent")
    }
}

/// Per-iteration record of a network contraction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ContractionStats {
    /// Largest bond dimension after each iteration's sweeps.
    pub max_bond: Vec<usize>,
    /// Wall-clock seconds spent in each iteration.
    pub wall_time: Vec<f64>,
    /// Sum over every truncating SVD of dropped weight over total weight.
    pub discarded_weight: f64,
}

impl ContractionStats {
    pub fn total_time(&self) -> f64 {
        self.wall_time.iter().sum()
    }

    pub fn peak_bond(&self) -> usize {
        self.max_bond.iter().copied().max().unwrap_or(1)
    }

    /// Tolerance implied by the accumulated truncation, `10·sqrt(weight)`.
    pub fn truncation_tolerance(&self) -> f64 {
        10.0 * self.discarded_weight.sqrt()
    }
}

/// Partially contracted influence functional: a chain of three-index
/// tensors, of which the first `finalized` are fixed and never touched again.
/// The represented tensor is `exp(log_scale)` times the product of the
/// sites; sweeps move the norm into `log_scale` so long chains stay finite.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMps {
    pub sites: Vec<MpsSite>,
    pub finalized: usize,
    pub log_scale: f64,
    pub stats: ContractionStats,
}

impl BoundaryMps {
    pub fn new(sites: Vec<MpsSite>) -> Result<Self> {
        let mps = BoundaryMps {
            sites,
            finalized: 0,
            log_scale: 0.0,
            stats: ContractionStats::default(),
        };
        mps.check()?;
        Ok(mps)
    }

    /// All-ones product chain over `n` legs of physical dimension `phys`.
    pub fn ones(n: usize, phys: usize) -> Self {
        BoundaryMps {
            sites: (0..n).map(|_| MpsSite::ones(phys)).collect(),
            finalized: 0,
            log_scale: 0.0,
            stats: ContractionStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites.iter().skip(1).map(|s| s.left).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|s| s.right).max().unwrap_or(1).max(1)
    }

    pub fn check(&self) -> Result<()> {
        if let Some(first) = self.sites.first() {
            if first.left != 1 {
                return Err(Error::Dimension("first left bond must be 1".into()));
            }
        }
        if let Some(last) = self.sites.last() {
            if last.right != 1 {
                return Err(Error::Dimension("last right bond must be 1".into()));
            }
        }
        for (j, w) in self.sites.windows(2).enumerate() {
            if w[0].right != w[1].left {
                return Err(Error::Dimension(format!(
                    "bond {j}: right extent {} vs left extent {}",
                    w[0].right, w[1].left
                )));
            }
        }
        for s in &self.sites {
            if s.data.len() != s.left * s.phys * s.right {
                return Err(Error::Dimension("site data length".into()));
            }
        }
        Ok(())
    }

    /// Chain element at the multi-index `legs` (one physical index per site).
    pub fn element(&self, legs: &[usize]) -> Result<C64> {
        if legs.len() != self.sites.len() {
            return Err(Error::Dimension(format!(
                "{} indices for {} sites",
                legs.len(),
                self.sites.len()
            )));
        }
        let mut v = vec![ONE];
        for (site, &p) in self.sites.iter().zip(legs) {
            if p >= site.phys {
                return Err(Error::Dimension(format!("index {p} out of {}", site.phys)));
            }
            let mut next = vec![C64::new(0.0, 0.0); site.right];
            for (l, &x) in v.iter().enumerate() {
                let row = &site.data[(l * site.phys + p) * site.right..][..site.right];
                for (n, &a) in next.iter_mut().zip(row) {
                    *n += x * a;
                }
            }
            v = next;
        }
        Ok(v[0] * self.log_scale.exp())
    }

    /// Full tensor over all legs, axis `j` for site `j`. Guarded to 2^22 entries.
    pub fn to_dense(&self) -> Result<DenseTensor> {
        let shape: Vec<usize> = self.sites.iter().map(|s| s.phys).collect();
        let total = shape.iter().try_fold(1usize, |a, &b| a.checked_mul(b));
        match total {
            Some(n) if n <= 1 << 22 => {}
            _ => return Err(Error::SizeGuard(format!("dense chain of shape {shape:?}"))),
        }
        // left-to-right accumulation: rows = multi-index so far, cols = bond
        let mut acc = Matrix::from_vec(1, 1, vec![ONE])?;
        for site in &self.sites {
            let m = site.as_left_matrix();
            let prod = acc.matmul(&m)?;
            acc = Matrix::from_vec(acc.rows() * site.phys, site.right, prod.into_data())?;
        }
        let scale = C64::new(self.log_scale.exp(), 0.0);
        DenseTensor::new(shape, acc.scale(scale).into_data())
    }

    /// Kept singular values divided by their norm, which is moved into
    /// `log_scale`.
    fn normalized(&mut self, sigma: &[f64]) -> Vec<f64> {
        let norm = sigma.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return sigma.to_vec();
        }
        self.log_scale += norm.ln();
        sigma.iter().map(|x| x / norm).collect()
    }

    /// One right-to-left then one left-to-right SVD sweep over the unfinalized
    /// part of the chain, truncating at `lambda_c`.
    pub fn sweep_compress(&mut self, lambda_c: f64) -> Result<()> {
        let range = self.finalized..self.sites.len();
        self.sweep_range(range, lambda_c)
    }

    /// Sweeps restricted to `range`. The left sweep stops by absorbing into
    /// the first site of the range, so sites outside are untouched.
    pub(crate) fn sweep_range(&mut self, range: Range<usize>, lambda_c: f64) -> Result<()> {
        if range.len() < 2 {
            return Ok(());
        }
        for j in (range.start + 1..range.end).rev() {
            let svd = svd_truncate(&self.sites[j].as_left_matrix(), lambda_c)?;
            self.stats.discarded_weight += svd.relative_discarded_weight();
            let rank = svd.rank();
            let (phys, right) = (self.sites[j].phys, self.sites[j].right);
            self.sites[j] = MpsSite::new(rank, phys, right, svd.v_dag.into_data())?;
            let mut us = svd.u;
            scale_columns(&mut us, &self.normalized(&svd.singular_values));
            let nb = &self.sites[j - 1];
            let merged = nb.as_right_matrix().matmul(&us)?;
            self.sites[j - 1] = MpsSite::new(nb.left, nb.phys, rank, merged.into_data())?;
        }
        for j in range.start..range.end - 1 {
            let svd = svd_truncate(&self.sites[j].as_right_matrix(), lambda_c)?;
            self.stats.discarded_weight += svd.relative_discarded_weight();
            let rank = svd.rank();
            let (left, phys) = (self.sites[j].left, self.sites[j].phys);
            self.sites[j] = MpsSite::new(left, phys, rank, svd.u.into_data())?;
            let mut sv = svd.v_dag;
            scale_rows(&mut sv, &self.normalized(&svd.singular_values));
            let nb = &self.sites[j + 1];
            let merged = sv.matmul(&nb.as_left_matrix())?;
            self.sites[j + 1] = MpsSite::new(rank, nb.phys, nb.right, merged.into_data())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_chain(rng: &mut impl Rng, phys: usize, bonds: &[usize]) -> BoundaryMps {
        let n = bonds.len() + 1;
        let sites = (0..n)
            .map(|j| {
                let l = if j == 0 { 1 } else { bonds[j - 1] };
                let r = if j == n - 1 { 1 } else { bonds[j] };
                let data = (0..l * phys * r)
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                MpsSite::new(l, phys, r, data).unwrap()
            })
            .collect();
        BoundaryMps::new(sites).unwrap()
    }

    fn rel_diff(a: &DenseTensor, b: &DenseTensor) -> f64 {
        let num: f64 = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        num.sqrt() / b.frobenius_norm()
    }

    #[test]
    fn lossless_sweep_preserves_chain() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let mut mps = random_chain(&mut rng, 4, &[3, 5, 4, 2]);
        let before = mps.to_dense().unwrap();
        mps.sweep_compress(0.0).unwrap();
        mps.check().unwrap();
        assert!(rel_diff(&mps.to_dense().unwrap(), &before) < 1e-12);
        assert_eq!(mps.stats.discarded_weight, 0.0);
    }

    #[test]
    fn product_chain_is_unchanged() {
        let mut mps = BoundaryMps::ones(5, 4);
        let before = mps.clone();
        mps.sweep_compress(1e-6).unwrap();
        assert_eq!(mps.stats.discarded_weight, 0.0);
        // sites only pick up a positive factor, which moves into log_scale
        for (a, b) in mps.sites.iter().zip(&before.sites) {
            assert_eq!((a.left, a.right), (1, 1));
            let ratio = a.data[0] / b.data[0];
            assert!(ratio.re > 0.0 && ratio.im.abs() < 1e-15);
            for (x, y) in a.data.iter().zip(&b.data) {
                assert!((x - y * ratio).norm() < 1e-15);
            }
        }
        let (got, want) = (mps.to_dense().unwrap(), before.to_dense().unwrap());
        assert!(rel_diff(&got, &want) < 1e-14);
    }

    #[test]
    fn lossy_sweep_error_is_bounded_by_discarded_weight() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for bonds in [vec![4, 8, 4], vec![2, 4, 8, 4, 2]] {
            let mut mps = random_chain(&mut rng, 4, &bonds);
            let before = mps.to_dense().unwrap();
            // lossless pass first so every truncation happens in canonical gauge
            mps.sweep_compress(0.0).unwrap();
            mps.sweep_compress(0.2).unwrap();
            let err = rel_diff(&mps.to_dense().unwrap(), &before);
            assert!(mps.stats.discarded_weight > 0.0);
            assert!(
                err <= mps.stats.discarded_weight.sqrt() * (1.0 + 1e-9),
                "{err}"
            );
        }
    }

    #[test]
    fn finalized_prefix_is_untouched() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let mut mps = random_chain(&mut rng, 4, &[3, 5, 4]);
        mps.finalized = 2;
        let before = mps.clone();
        mps.sweep_compress(1e-3).unwrap();
        assert_eq!(mps.sites[..2], before.sites[..2]);
    }

    #[test]
    fn element_matches_dense() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let mps = random_chain(&mut rng, 3, &[2, 3]);
        let dense = mps.to_dense().unwrap();
        assert!((mps.element(&[2, 0, 1]).unwrap() - dense.get(&[2, 0, 1])).norm() < 1e-14);
    }

    #[test]
    fn bad_chain_is_rejected() {
        let a = MpsSite::new(1, 2, 3, vec![ONE; 6]).unwrap();
        let b = MpsSite::new(2, 2, 1, vec![ONE; 4]).unwrap();
        assert!(BoundaryMps::new(vec![a, b]).is_err());
    }
}

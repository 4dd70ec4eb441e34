use serde::{Deserialize, Serialize};

use crate::bath::InfluenceTensorSet;
use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Matrix, C64, ZERO};

use super::mps::{BoundaryMps, MpsSite};

/// Which of the two boundary placements builds the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Each row ties a new leg to all earlier ones; the boundary grows.
    Nonlocal,
    /// Each row ties one leg to all later ones and finalizes it.
    Local,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Nonlocal => "nonlocal",
            Scheme::Local => "local",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonlocal" | "non-local" => Ok(Scheme::Nonlocal),
            "local" => Ok(Scheme::Local),
            other => Err(Error::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

/// One factor of a row: the leg it acts on and its weight `w[(c, p)]`, where
/// `c` is the value carried along the delta thread and `p` the leg's index.
#[derive(Clone, Debug, PartialEq)]
pub struct RowSite {
    /// Leg number, 1-based (`α_leg`).
    pub leg: usize,
    pub weight: Matrix,
}

/// A layer of the network: a string of influence tensors sharing one leg,
/// stored sparsely as the per-leg weights of the thread that carries that
/// leg's value.
#[derive(Clone, Debug, PartialEq)]
pub struct MpoRow {
    pub scheme: Scheme,
    pub row_index: usize,
    /// The shared leg comes first, followed by legs in thread order. Legs
    /// whose influence tensor is identically one are omitted.
    pub sites: Vec<RowSite>,
}

/// Row `i` of the non-local network: `Π_{j ≤ i} b_{i−j}[α_i, α_j]`.
pub fn build_nonlocal_row(i: usize, bset: &InfluenceTensorSet) -> Result<MpoRow> {
    bset.check()?;
    if i == 0 || i > bset.b.len() {
        return Err(Error::Domain(format!(
            "row {i} outside 1..={} covered by the influence tensors",
            bset.b.len()
        )));
    }
    let depth = bset.depth();
    let mut sites = vec![RowSite {
        leg: i,
        weight: diagonal_of(&bset.b[0]),
    }];
    for j in (1..i).rev() {
        let l = i - j;
        if l > depth {
            break;
        }
        sites.push(RowSite {
            leg: j,
            weight: bset.b[l].clone(),
        });
    }
    Ok(MpoRow {
        scheme: Scheme::Nonlocal,
        row_index: i,
        sites,
    })
}

/// Row `i` of the local network on `k` legs: `Π_{j ≥ i} b_{j−i}[α_j, α_i]`.
pub fn build_local_row(i: usize, k: usize, bset: &InfluenceTensorSet) -> Result<MpoRow> {
    bset.check()?;
    if k > bset.b.len() {
        return Err(Error::Domain(format!(
            "horizon {k} exceeds the {} influence tensors",
            bset.b.len()
        )));
    }
    if i == 0 || i > k {
        return Err(Error::Domain(format!("row {i} outside 1..={k}")));
    }
    let depth = bset.depth();
    let mut sites = vec![RowSite {
        leg: i,
        weight: diagonal_of(&bset.b[0]),
    }];
    for j in i + 1..=k {
        let l = j - i;
        if l > depth {
            break;
        }
        sites.push(RowSite {
            leg: j,
            weight: bset.b[l].transpose(),
        });
    }
    Ok(MpoRow {
        scheme: Scheme::Local,
        row_index: i,
        sites,
    })
}

/// Start weight `w[(c, p)] = δ_{cp} b[p, p]`.
fn diagonal_of(b: &Matrix) -> Matrix {
    Matrix::from_fn(
        b.rows(),
        b.cols(),
        |c, p| if c == p { b[(p, p)] } else { ZERO },
    )
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

impl MpoRow {
    /// Legs touched, in thread order.
    pub fn legs(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.leg).collect()
    }

    /// Value of the row on the full multi-index over `n` legs (`legs[j]` is
    /// `α_{j+1}`); legs the row does not touch are free.
    pub fn value(&self, legs: &[usize]) -> C64 {
        let c = legs[self.sites[0].leg - 1];
        self.sites
            .iter()
            .map(|s| s.weight[(c, legs[s.leg - 1])])
            .product()
    }

    /// Dense tensor of the row over `n` legs, axis `j` for `α_{j+1}`.
    pub fn to_dense(&self, n: usize) -> Result<DenseTensor> {
        let dd = self.sites[0].weight.rows();
        if self.sites.iter().any(|s| s.leg > n) {
            return Err(Error::Dimension(format!("row reaches beyond {n} legs")));
        }
        if (dd as f64).powi(n as i32) > (1u64 << 22) as f64 {
            return Err(Error::SizeGuard(format!("dense row over {n} legs")));
        }
        Ok(DenseTensor::from_fn(vec![dd; n], |idx| self.value(idx)))
    }

    /// Multiplies the row into `mps` (site `j` holds leg `j + 1`), threading
    /// the shared leg's value through the bonds between the touched sites.
    pub fn apply(&self, mps: &mut BoundaryMps) -> Result<()> {
        let n = self.sites.len();
        if self.sites.iter().any(|s| s.leg == 0 || s.leg > mps.len()) {
            return Err(Error::Dimension(format!(
                "row {} does not fit a chain of {} sites",
                self.row_index,
                mps.len()
            )));
        }
        let toward = match self.scheme {
            Scheme::Nonlocal => Side::Left,
            Scheme::Local => Side::Right,
        };
        for (t, rs) in self.sites.iter().enumerate() {
            let site = &mps.sites[rs.leg - 1];
            let start = t == 0;
            let end = t + 1 == n;
            // bond on the start side of the thread carries it in, the far side out
            let (thread_left, thread_right) = match toward {
                Side::Right => (!start, !end),
                Side::Left => (!end, !start),
            };
            mps.sites[rs.leg - 1] =
                thread_site(site, &rs.weight, thread_left, thread_right, start)?;
        }
        Ok(())
    }
}

/// New site with the thread bond folded into the left and/or right bond as
/// `(bond, c) ↦ bond·D + c`. A start site only carries `c = p`.
fn thread_site(
    site: &MpsSite,
    weight: &Matrix,
    thread_left: bool,
    thread_right: bool,
    start: bool,
) -> Result<MpsSite> {
    let dd = site.phys;
    if weight.rows() != dd || weight.cols() != dd {
        return Err(Error::Dimension(format!(
            "weight {}x{} on a site of physical dimension {dd}",
            weight.rows(),
            weight.cols()
        )));
    }
    let cl = if thread_left { dd } else { 1 };
    let cr = if thread_right { dd } else { 1 };
    let (nl, nr) = (site.left * cl, site.right * cr);
    let mut data = vec![ZERO; nl * dd * nr];
    for l in 0..site.left {
        for p in 0..dd {
            let src = &site.data[(l * dd + p) * site.right..][..site.right];
            let threads = if start { p..p + 1 } else { 0..dd };
            for c in threads {
                let w = weight[(c, p)];
                if w == ZERO {
                    continue;
                }
                let row_l = if thread_left { l * dd + c } else { l };
                let dst = &mut data[(row_l * dd + p) * nr..][..nr];
                for (r, &a) in src.iter().enumerate() {
                    let col_r = if thread_right { r * dd + c } else { r };
                    dst[col_r] = a * w;
                }
            }
        }
    }
    MpsSite::new(nl, dd, nr, data)
}

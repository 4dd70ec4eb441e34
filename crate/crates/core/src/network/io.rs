//! Binary container for [`InfluenceMps`].
//!
//! Little-endian throughout:
//!
//! ```text
//! magic      8 bytes  "PTINFMPS"
//! version    u32      1
//! d          u32      system dimension
//! lambdas    d × f64  coupling-operator eigenvalues
//! n_sites    u32
//! scheme     u32      0 = nonlocal, 1 = local
//! dt         f64
//! lambda_c   f64
//! discarded  f64      cumulative relative discarded weight
//! log_scale  f64      natural log of the overall factor
//! per site:  u32 left, u32 phys, u32 right,
//!            left·phys·right pairs of f64 (re, im), row-major
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::tensor::C64;

use super::contract::InfluenceMps;
use super::mps::{ContractionStats, MpsSite};
use super::row::Scheme;

const MAGIC: &[u8; 8] = b"PTINFMPS";
const VERSION: u32 = 1;

/// Largest site accepted when reading, in complex entries.
const MAX_SITE_LEN: u64 = 1 << 28;

pub fn write_mps<W: Write>(mps: &InfluenceMps, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(mps.d as u32).to_le_bytes())?;
    for l in &mps.lambdas {
        w.write_all(&l.to_le_bytes())?;
    }
    w.write_all(&(mps.sites.len() as u32).to_le_bytes())?;
    let scheme: u32 = match mps.scheme {
        Scheme::Nonlocal => 0,
        Scheme::Local => 1,
    };
    w.write_all(&scheme.to_le_bytes())?;
    for x in [
        mps.dt,
        mps.lambda_c,
        mps.stats.discarded_weight,
        mps.log_scale,
    ] {
        w.write_all(&x.to_le_bytes())?;
    }
    for s in &mps.sites {
        for n in [s.left, s.phys, s.right] {
            w.write_all(&(n as u32).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(s.data.len() * 16);
        for z in &s.data {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_mps<R: Read>(mut r: R) -> Result<InfluenceMps> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not an influence MPS file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let d = read_u32(&mut r)? as usize;
    if d == 0 || d > 1 << 12 {
        return Err(Error::Format(format!("implausible system dimension {d}")));
    }
    let lambdas = (0..d)
        .map(|_| read_f64(&mut r))
        .collect::<Result<Vec<_>>>()?;
    let n = read_u32(&mut r)? as usize;
    let scheme = match read_u32(&mut r)? {
        0 => Scheme::Nonlocal,
        1 => Scheme::Local,
        other => return Err(Error::Format(format!("unknown scheme tag {other}"))),
    };
    let dt = read_f64(&mut r)?;
    let lambda_c = read_f64(&mut r)?;
    let discarded = read_f64(&mut r)?;
    let log_scale = read_f64(&mut r)?;
    if !log_scale.is_finite() {
        return Err(Error::Format("non-finite scale".into()));
    }
    let mut sites = Vec::with_capacity(n.min(1 << 16));
    for j in 0..n {
        let (l, p, rr) = (read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?);
        let len = l as u64 * p as u64 * rr as u64;
        if len > MAX_SITE_LEN || p as usize != d * d {
            return Err(Error::Format(format!("site {j} has shape {l}x{p}x{rr}")));
        }
        let mut raw = vec![0u8; len as usize * 16];
        r.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                C64::new(re, im)
            })
            .collect();
        sites.push(MpsSite::new(l as usize, p as usize, rr as usize, data)?);
    }
    let chain = super::mps::BoundaryMps::new(sites).map_err(|e| Error::Format(e.to_string()))?;
    Ok(InfluenceMps {
        d,
        lambdas,
        dt,
        lambda_c,
        scheme,
        sites: chain.sites,
        log_scale,
        stats: ContractionStats {
            discarded_weight: discarded,
            ..ContractionStats::default()
        },
    })
}

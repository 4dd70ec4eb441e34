use std::io::Write;

use crate::error::{Error, Result};
use crate::network::InfluenceMps;
use crate::tensor::{Matrix, C64, ZERO};

use super::{
    free_half_propagator, unvectorize, vec_trace, vectorize, BreakPolicy, Intervention,
    LiouvillePropagator, SystemSpec,
};

/// The influence MPS dressed with a system: the approximate process tensor,
/// with the initial state attached only when a contraction starts.
#[derive(Clone, Debug)]
pub struct Process<'a> {
    pub sys: &'a SystemSpec,
    pub mps: &'a InfluenceMps,
    pub prop: LiouvillePropagator,
    /// `env[j]` closes sites `j..k` with every later leg averaged over its
    /// diagonal values; `env[k] = [1]`. Stored with unit max-norm, the
    /// natural-log magnitudes kept in `env_log`.
    env: Vec<Vec<C64>>,
    env_log: Vec<f64>,
}

impl<'a> Process<'a> {
    pub fn new(mps: &'a InfluenceMps, sys: &'a SystemSpec) -> Result<Self> {
        sys.validate()?;
        if sys.d != mps.d {
            return Err(Error::Config(format!(
                "system dimension {} but influence network built for {}",
                sys.d, mps.d
            )));
        }
        let same_basis = sys
            .lambdas
            .iter()
            .zip(&mps.lambdas)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));
        if !same_basis {
            return Err(Error::Config(format!(
                "coupling eigenvalues {:?} differ from the network's {:?}",
                sys.lambdas, mps.lambdas
            )));
        }
        let prop = free_half_propagator(sys, mps.dt)?;
        let (env, env_log) = right_environments(mps);
        Ok(Process {
            sys,
            mps,
            prop,
            env,
            env_log,
        })
    }

    /// Number of steps the network covers.
    pub fn horizon(&self) -> usize {
        self.mps.k()
    }

    pub fn dt(&self) -> f64 {
        self.mps.dt
    }

    pub fn cursor(&self) -> Cursor<'_> {
        self.cursor_from(&self.sys.rho0)
    }

    pub fn cursor_from(&self, rho: &Matrix) -> Cursor<'_> {
        let dd = self.mps.dim();
        Cursor {
            process: self,
            x: Matrix::from_vec(1, dd, vectorize(rho)).expect("d x d state"),
            log_scale: 0.0,
            leg: 0,
            steps: 0,
        }
    }
}

/// Largest entry modulus, or one for an all-zero slice.
fn max_norm(v: &[C64]) -> f64 {
    let m = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if m > 0.0 && m.is_finite() {
        m
    } else {
        1.0
    }
}

fn right_environments(mps: &InfluenceMps) -> (Vec<Vec<C64>>, Vec<f64>) {
    let (d, k) = (mps.d, mps.k());
    let w = 1.0 / d as f64;
    let mut env = vec![Vec::new(); k + 1];
    let mut env_log = vec![0.0; k + 1];
    env[k] = vec![C64::new(1.0, 0.0)];
    for j in (0..k).rev() {
        let site = &mps.sites[j];
        let next = &env[j + 1];
        let raw: Vec<C64> = (0..site.left)
            .map(|l| {
                let mut acc = ZERO;
                for s in 0..d {
                    let p = s + d * s;
                    let row = &site.data[(l * site.phys + p) * site.right..][..site.right];
                    acc += row.iter().zip(next).map(|(a, b)| a * b).sum::<C64>();
                }
                acc * w
            })
            .collect();
        let norm = max_norm(&raw);
        env[j] = raw.into_iter().map(|z| z / norm).collect();
        env_log[j] = env_log[j + 1] + norm.ln();
    }
    (env, env_log)
}

/// Left-to-right contraction state: `x[(bond, α)]` is the system operator
/// (vectorized along `α`) conditioned on the open bond into the next site.
#[derive(Clone, Debug)]
pub struct Cursor<'p> {
    process: &'p Process<'p>,
    x: Matrix,
    /// Natural log of the factor divided out of `x`.
    log_scale: f64,
    /// Next site to absorb; reset to zero when the bath is restarted.
    leg: usize,
    steps: usize,
}

impl Cursor<'_> {
    /// Steps taken since the start.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Applies `op` to the current state and advances one time step.
    pub fn step(&mut self, op: &Intervention) -> Result<()> {
        let p = self.process;
        let dd = p.mps.dim();
        if self.leg >= p.horizon() {
            return Err(Error::Domain(format!(
                "step {} runs past the {}-step influence network",
                self.steps + 1,
                p.horizon()
            )));
        }
        op.check(dd)?;
        let pre = match op {
            Intervention::Identity => p.prop.v_half.clone(),
            Intervention::Super(m) => p.prop.v_half.matmul(m)?,
        };
        let site = &p.mps.sites[self.leg];
        let chi = self.x.rows();
        if site.left != chi {
            return Err(Error::Dimension(format!(
                "state bond {chi} does not match site {} left bond {}",
                self.leg, site.left
            )));
        }
        // y = x · preᵀ
        let y = self.x.matmul(&pre.transpose())?;
        let r = site.right;
        let mut z = Matrix::zeros(r, dd);
        for b in 0..chi {
            for a in 0..dd {
                let ya = y[(b, a)];
                if ya == ZERO {
                    continue;
                }
                let row = &site.data[(b * dd + a) * r..][..r];
                for (bp, &s) in row.iter().enumerate() {
                    z[(bp, a)] += ya * s;
                }
            }
        }
        let mut x = z.matmul(&p.prop.v_half.transpose())?;
        let norm = max_norm(x.data());
        if norm != 1.0 {
            x = x.scale(C64::new(1.0 / norm, 0.0));
            self.log_scale += norm.ln();
        }
        self.x = x;
        self.leg += 1;
        self.steps += 1;
        if !self.x.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite state at step {}",
                self.steps
            )));
        }
        Ok(())
    }

    /// Current reduced operator, vectorized.
    pub fn reduced_vec(&self) -> Vec<C64> {
        let p = self.process;
        let env = &p.env[self.leg];
        let dd = self.x.cols();
        let factor = (p.mps.log_scale + self.log_scale + p.env_log[self.leg]).exp();
        let mut out = vec![ZERO; dd];
        for (b, &e) in env.iter().enumerate() {
            for (o, &v) in out.iter_mut().zip(&self.x.data()[b * dd..(b + 1) * dd]) {
                *o += e * v;
            }
        }
        out.iter_mut().for_each(|o| *o *= factor);
        out
    }

    /// Current reduced (possibly subnormalized) state.
    pub fn reduced(&self) -> Matrix {
        unvectorize(&self.reduced_vec(), self.process.sys.d)
    }

    /// Closes off the bath history and continues from a fresh thermal bath
    /// with the current reduced state.
    pub fn restart(&mut self) {
        let v = self.reduced_vec();
        let dd = v.len();
        self.x = Matrix::from_vec(1, dd, v).expect("vector length");
        self.log_scale = 0.0;
        self.leg = 0;
    }

    /// Restarts if `policy` cuts at the current step.
    pub fn apply_policy(&mut self, policy: &BreakPolicy) {
        if policy.is_cut(self.steps) {
            self.restart();
        }
    }
}

fn check_policy(policy: &BreakPolicy, n: usize) -> Result<()> {
    if let BreakPolicy::CutAtTimes(steps) = policy {
        if let Some(&s) = steps.iter().find(|&&s| s > n) {
            return Err(Error::Config(format!(
                "cut at step {s} beyond the {n}-step grid"
            )));
        }
    }
    Ok(())
}

/// `ρ_n` for the interventions `seq[0..n]`, `seq[j]` acting on the state at
/// step `j` just before the step to `j + 1`.
pub fn contract_with_interventions(
    process: &Process<'_>,
    seq: &[Intervention],
    policy: &BreakPolicy,
) -> Result<Matrix> {
    check_policy(policy, seq.len())?;
    let mut cur = process.cursor();
    for op in seq {
        cur.apply_policy(policy);
        cur.step(op)?;
    }
    Ok(cur.reduced())
}

/// `ρ_0, ρ_1, …, ρ_n` with identity interventions, in one pass.
pub fn density_trajectory(
    process: &Process<'_>,
    n: usize,
    policy: &BreakPolicy,
) -> Result<Vec<Matrix>> {
    check_policy(policy, n)?;
    let mut cur = process.cursor();
    let mut out = Vec::with_capacity(n + 1);
    out.push(cur.reduced());
    for _ in 0..n {
        cur.apply_policy(policy);
        cur.step(&Intervention::Identity)?;
        out.push(cur.reduced());
    }
    Ok(out)
}

/// An operator insertion `ρ ↦ A ρ B†` at a grid step.
#[derive(Clone, Debug, PartialEq)]
pub struct Insertion {
    pub step: usize,
    pub op: Intervention,
}

impl Insertion {
    pub fn new(step: usize, left: &Matrix, right: &Matrix) -> Result<Self> {
        Ok(Insertion {
            step,
            op: Intervention::from_ops(left, right)?,
        })
    }

    pub fn left(step: usize, op: &Matrix) -> Result<Self> {
        Ok(Insertion {
            step,
            op: Intervention::left(op)?,
        })
    }
}

/// `tr ρ_n` with identity interventions except at the insertion steps.
/// Insertions must be strictly ordered in `0..=n`; one at `n` acts on the
/// final state.
pub fn multitime_correlation(
    process: &Process<'_>,
    insertions: &[Insertion],
    n: usize,
    policy: &BreakPolicy,
) -> Result<C64> {
    check_policy(policy, n)?;
    for w in insertions.windows(2) {
        if w[1].step <= w[0].step {
            return Err(Error::Config(format!(
                "insertion steps must be strictly increasing, got {} then {}",
                w[0].step, w[1].step
            )));
        }
    }
    if let Some(last) = insertions.last() {
        if last.step > n {
            return Err(Error::Config(format!(
                "insertion at step {} beyond {n}",
                last.step
            )));
        }
    }
    let mut cur = process.cursor();
    let mut pending = insertions.iter().peekable();
    for j in 0..n {
        cur.apply_policy(policy);
        let op = match pending.next_if(|ins| ins.step == j) {
            Some(ins) => ins.op.clone(),
            None => Intervention::Identity,
        };
        cur.step(&op)?;
    }
    let mut v = cur.reduced_vec();
    if let Some(ins) = pending.next() {
        v = ins.op.apply(&v);
    }
    Ok(vec_trace(&v, process.sys.d))
}

/// Evaluates `contract_with_interventions` under a fixed break policy.
pub fn apply_break_policy<'p>(
    process: &'p Process<'p>,
    policy: BreakPolicy,
) -> impl Fn(&[Intervention]) -> Result<Matrix> + 'p {
    move |seq| contract_with_interventions(process, seq, &policy)
}

/// Hermiticity defect `max |ρ − ρ†|`.
pub fn hermiticity_error(rho: &Matrix) -> f64 {
    rho.max_abs_diff(&rho.adjoint())
}

/// Smallest eigenvalue of the Hermitian part of `rho`.
pub fn min_eigenvalue(rho: &Matrix) -> Result<f64> {
    let herm = rho.add(&rho.adjoint())?.scale(C64::new(0.5, 0.0));
    let (ev, _) = crate::tensor::hermitian_eigen(&herm)?;
    Ok(ev[0])
}

/// CSV with a header `t,re_00,im_00,re_01,…`, one row per state.
pub fn write_trajectory_csv<W: Write>(traj: &[Matrix], dt: f64, w: W) -> Result<()> {
    let d = traj.first().map_or(0, |m| m.rows());
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    for s in 0..d {
        for r in 0..d {
            header.push(format!("re_{s}{r}"));
            header.push(format!("im_{s}{r}"));
        }
    }
    out.write_record(&header)?;
    for (j, rho) in traj.iter().enumerate() {
        let mut rec = vec![format!("{}", j as f64 * dt)];
        for s in 0..d {
            for r in 0..d {
                rec.push(format!("{:e}", rho[(s, r)].re));
                rec.push(format!("{:e}", rho[(s, r)].im));
            }
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

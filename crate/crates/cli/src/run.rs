use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use procten::bath::{influence_tensors, memory_kernel};
use procten::network::{contract, memory_truncate, write_mps};
use procten::observables::{
    detuning_grid, emission_spectrum, g1_series, steady_state_anchor, CorrelationSeries, Spectrum,
};
use procten::process::{density_trajectory, write_trajectory_csv, Process};
use procten::scaling::{benchmark as run_benchmark, write_records_csv, write_records_jsonl};
use procten::scaling::{BenchCase, BenchOptions};
use procten::{BreakPolicy, InfluenceMps};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};
use crate::Failure;

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = PathBuf::from(&cfg.output.directory);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn wants(cfg: &RunConfig, f: Format) -> bool {
    cfg.output.formats.contains(&f)
}

/// SHA-256 of the configuration after defaults and overrides.
fn config_hash(cfg: &RunConfig) -> String {
    let canonical = serde_json::to_vec(cfg).expect("configuration serializes");
    hex::encode(Sha256::digest(canonical))
}

fn network(cfg: &RunConfig) -> Result<InfluenceMps, Failure> {
    let grid = cfg.grid()?;
    let kernel = memory_kernel(&grid, &cfg.bath()?)?;
    let mut bset = influence_tensors(&kernel, &cfg.system.coupling_eigenvalues)?;
    if let Some(m) = cfg.solver.memory_depth {
        bset = memory_truncate(&bset, m)?;
    }
    log::info!(
        "contracting {} steps with the {} scheme",
        grid.k,
        cfg.solver.scheme.name()
    );
    Ok(contract(
        cfg.solver.scheme,
        &bset,
        &grid,
        cfg.solver.lambda_c,
    )?)
}

/// Writes `stats.json` (deterministic) and `timing.json` (wall-clock).
fn write_stats(
    cfg: &RunConfig,
    dir: &Path,
    command: &str,
    mps: &InfluenceMps,
    extra: Value,
) -> Result<(), Failure> {
    if wants(cfg, Format::Mps) {
        write_mps(mps, create(dir, "influence.mps")?)?;
    }
    if !wants(cfg, Format::Json) {
        return Ok(());
    }
    let stats = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_hash": config_hash(cfg),
        "config": cfg,
        "scheme": mps.scheme,
        "k": mps.k(),
        "dt": mps.dt,
        "lambda_c": mps.lambda_c,
        "bond_history": mps.stats.max_bond,
        "peak_bond": mps.stats.peak_bond(),
        "discarded_weight": mps.stats.discarded_weight,
        "truncation_tolerance": mps.tolerance(),
        "results": extra,
    });
    serde_json::to_writer_pretty(create(dir, "stats.json")?, &stats)
        .map_err(|e| procten::Error::Format(e.to_string()))?;
    let timing = json!({
        "wall_time": mps.stats.wall_time,
        "total_time": mps.stats.total_time(),
    });
    serde_json::to_writer_pretty(create(dir, "timing.json")?, &timing)
        .map_err(|e| procten::Error::Format(e.to_string()))?;
    Ok(())
}

pub fn evolve(cfg: &RunConfig) -> Result<(), Failure> {
    let sys = cfg.system()?;
    let dir = out_dir(cfg)?;
    let mps = network(cfg)?;
    let process = Process::new(&mps, &sys)?;
    let traj = density_trajectory(&process, cfg.grid.k, &cfg.task.policy)?;
    if wants(cfg, Format::Csv) {
        write_trajectory_csv(&traj, mps.dt, create(&dir, "trajectory.csv")?)?;
    }
    let final_trace = traj.last().map(|r| r.trace().re).unwrap_or(1.0);
    write_stats(
        cfg,
        &dir,
        "evolve",
        &mps,
        json!({ "policy": cfg.task.policy, "final_trace": final_trace }),
    )?;
    println!("wrote {} states to {}", traj.len(), dir.display());
    Ok(())
}

fn spectrum_metrics(cfg: &RunConfig, s: &Spectrum) -> Value {
    json!({
        "peak": s.peak(),
        "asymmetry": s.sideband_asymmetry(0.0, cfg.task.asymmetry_gap),
        "resonance_weight": s.peak_weight_fraction(0.0, cfg.task.resonance_half_width),
    })
}

/// `correlate` and, with `spectra`, `spectrum`.
pub fn correlate(cfg: &RunConfig, spectra: bool) -> Result<(), Failure> {
    let sys = cfg.system()?;
    let dir = out_dir(cfg)?;
    let mps = network(cfg)?;
    let process = Process::new(&mps, &sys)?;
    let n_tau = cfg.n_tau();
    let (anchor, converged) = match cfg.task.anchor {
        Some(a) => (a, None),
        None => {
            let last = cfg.grid.k - n_tau;
            let traj = density_trajectory(&process, last, &BreakPolicy::None)?;
            let steady = steady_state_anchor(&traj)?;
            (steady.step, Some(steady.converged))
        }
    };
    let detunings = detuning_grid(
        cfg.task.detuning.min,
        cfg.task.detuning.max,
        cfg.task.detuning.points,
    );
    let mut results = serde_json::Map::new();
    for &name in &cfg.task.policies {
        let series: CorrelationSeries = g1_series(&process, anchor, n_tau, &name.policy(anchor))?;
        let mut entry = json!({ "g1_infinity": [series.g1_infinity.re, series.g1_infinity.im] });
        if wants(cfg, Format::Csv) {
            series.write_csv(create(&dir, &format!("g1_{}.csv", name.name()))?)?;
        }
        if spectra {
            let s = emission_spectrum(&series, &detunings, cfg.task.window_rate)?;
            if wants(cfg, Format::Csv) {
                s.write_csv(create(&dir, &format!("spectrum_{}.csv", name.name()))?)?;
            }
            entry["spectrum"] = spectrum_metrics(cfg, &s);
        }
        results.insert(name.name().into(), entry);
    }
    let extra = json!({
        "anchor_step": anchor,
        "anchor_converged": converged,
        "n_tau": n_tau,
        "policies": results,
    });
    let command = if spectra { "spectrum" } else { "correlate" };
    write_stats(cfg, &dir, command, &mps, extra)?;
    println!(
        "anchored at step {anchor}; wrote {command} output to {}",
        dir.display()
    );
    Ok(())
}

pub fn benchmark(cfg: &RunConfig) -> Result<(), Failure> {
    let dir = out_dir(cfg)?;
    let alphas = cfg
        .task
        .alphas
        .clone()
        .unwrap_or_else(|| vec![cfg.bath.alpha]);
    let ks = cfg.task.ks.clone().unwrap_or_else(|| vec![cfg.grid.k]);
    let mut cases = Vec::new();
    for &alpha in &alphas {
        for &k in &ks {
            let mut c = cfg.clone();
            c.bath.alpha = alpha;
            c.grid.k = k;
            cases.push(BenchCase {
                bath: c.bath()?,
                dt: cfg.grid.dt,
                k,
                lambda_c: cfg.solver.lambda_c,
            });
        }
    }
    let opts = BenchOptions {
        warmup: cfg.task.warmup,
        parallel: cfg.task.parallel,
        ..BenchOptions::default()
    };
    let records = run_benchmark(&cases, &opts);
    write_records_jsonl(&records, create(&dir, "bench.jsonl")?)?;
    write_records_csv(&records, create(&dir, "bench.csv")?)?;
    for r in &records {
        println!(
            "{:>8} alpha {:<5} k {:<6} {:>9.3}s peak bond {:<4} {}",
            r.scheme.name(),
            r.alpha,
            r.k,
            r.total_time,
            r.max_bond.iter().max().copied().unwrap_or(0),
            match (&r.error, r.valid) {
                (Some(e), _) => format!("failed: {e}"),
                (None, true) => "ok".into(),
                (None, false) => format!(
                    "flagged: schemes differ by {:.2e}",
                    r.cross_scheme_diff.unwrap_or(f64::NAN)
                ),
            }
        );
    }
    Ok(())
}

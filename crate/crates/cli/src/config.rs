//! Run configuration. Frequencies are in units of the system frequency Ω,
//! times in 1/Ω.

use procten::bath::{DiscreteMode, QuadControls};
use procten::process::pauli_x;
use procten::tensor::{Matrix, C64};
use procten::{BathSpec, BreakPolicy, Scheme, SystemSpec, TimeGrid};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Configuration problem, reported with the offending field path.
#[derive(Debug)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

fn schema(path: &str, message: impl Into<String>) -> SchemaError {
    SchemaError {
        path: path.into(),
        message: message.into(),
    }
}

/// Matrix entry: a real number or `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> C64 {
        match self {
            Entry::Real(x) => C64::new(x, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }
    }
}

pub type Rows = Vec<Vec<Entry>>;

fn to_matrix(rows: &Rows, d: usize, path: &str) -> Result<Matrix, SchemaError> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(schema(path, format!("expected a {d}x{d} matrix")));
    }
    Ok(Matrix::from_fn(d, d, |i, j| rows[i][j].value()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    #[serde(default = "two")]
    pub d: usize,
    /// Free Hamiltonian; `σ_x/2` when omitted.
    pub h0: Option<Rows>,
    /// Eigenvalues of the coupling operator, diagonal in the working basis.
    #[serde(default = "half_spin")]
    pub coupling_eigenvalues: Vec<f64>,
    /// Initial state; `|0⟩⟨0|` when omitted.
    pub rho0: Option<Rows>,
}

fn two() -> usize {
    2
}

fn half_spin() -> Vec<f64> {
    vec![0.5, -0.5]
}

impl Default for SystemBlock {
    fn default() -> Self {
        SystemBlock {
            d: 2,
            h0: None,
            coupling_eigenvalues: half_spin(),
            rho0: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathBlock {
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "one")]
    pub omega_c: f64,
    #[serde(default = "one")]
    pub nu: f64,
    /// Temperature `T`; converted to `β = 1/T`, zero meaning `β = ∞`.
    pub temperature: Option<f64>,
    pub beta: Option<f64>,
    pub modes: Option<Vec<DiscreteMode>>,
    #[serde(default)]
    pub quad: QuadControls,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub dt: f64,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default = "local")]
    pub scheme: Scheme,
    #[serde(default = "default_cutoff")]
    pub lambda_c: f64,
    /// Largest retained step separation; all of them when omitted.
    pub memory_depth: Option<usize>,
}

fn local() -> Scheme {
    Scheme::Local
}

fn default_cutoff() -> f64 {
    1e-6
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            scheme: Scheme::Local,
            lambda_c: default_cutoff(),
            memory_depth: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyName {
    Exact,
    Regression,
    Markov,
}

impl PolicyName {
    pub fn name(self) -> &'static str {
        match self {
            PolicyName::Exact => "exact",
            PolicyName::Regression => "regression",
            PolicyName::Markov => "markov",
        }
    }

    /// Policy for a correlation anchored at `anchor`.
    pub fn policy(self, anchor: usize) -> BreakPolicy {
        match self {
            PolicyName::Exact => BreakPolicy::None,
            PolicyName::Regression => BreakPolicy::CutAtTimes(vec![anchor]),
            PolicyName::Markov => BreakPolicy::EveryStep,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetuningBlock {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for DetuningBlock {
    fn default() -> Self {
        DetuningBlock {
            min: -30.0,
            max: 30.0,
            points: 601,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskBlock {
    /// Policy of `evolve`.
    #[serde(default = "exact")]
    pub policy: BreakPolicy,
    /// Correlation anchor step; detected from the trajectory when omitted.
    pub anchor: Option<usize>,
    /// Correlation delays in steps; `k / 2` when omitted.
    pub n_tau: Option<usize>,
    #[serde(default = "all_policies")]
    pub policies: Vec<PolicyName>,
    #[serde(default)]
    pub detuning: DetuningBlock,
    /// Exponential apodization rate of `g¹` before the transform.
    #[serde(default)]
    pub window_rate: f64,
    /// Half-width around zero detuning excluded by the asymmetry metric.
    #[serde(default = "two_f")]
    pub asymmetry_gap: f64,
    /// Half-width around zero detuning counted as the resonance.
    #[serde(default = "three_f")]
    pub resonance_half_width: f64,
    /// Coupling strengths swept by `benchmark`; the bath value when omitted.
    pub alphas: Option<Vec<f64>>,
    /// Grid lengths swept by `benchmark`; the grid value when omitted.
    pub ks: Option<Vec<usize>>,
    #[serde(default = "yes")]
    pub warmup: bool,
    #[serde(default)]
    pub parallel: bool,
}

fn exact() -> BreakPolicy {
    BreakPolicy::None
}

fn all_policies() -> Vec<PolicyName> {
    vec![
        PolicyName::Exact,
        PolicyName::Regression,
        PolicyName::Markov,
    ]
}

fn two_f() -> f64 {
    2.0
}

fn three_f() -> f64 {
    3.0
}

fn yes() -> bool {
    true
}

impl Default for TaskBlock {
    fn default() -> Self {
        serde_json::from_value(Value::Object(Default::default())).expect("all task fields default")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    /// Binary influence network.
    Mps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "out_dir")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn out_dir() -> String {
    "out".into()
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: out_dir(),
            formats: default_formats(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: SystemBlock,
    pub bath: BathBlock,
    pub grid: GridBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub task: TaskBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

/// Sets `path` (dot separated) in `doc` to `raw`, read as JSON when it
/// parses and as a string otherwise.
pub fn apply_override(doc: &mut Value, path: &str, raw: &str) -> Result<(), SchemaError> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
    let mut node = doc;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(schema(path, "empty key in override path"));
    }
    for (i, part) in parts.iter().enumerate() {
        let obj = match node {
            Value::Object(map) => map,
            _ => return Err(schema(&parts[..i].join("."), "not an object")),
        };
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("path has at least one part")
}

/// Parses `doc` into a configuration, reporting the failing field path.
pub fn from_value(doc: Value) -> Result<RunConfig, SchemaError> {
    let cfg: RunConfig = serde_path_to_error::deserialize(doc).map_err(|e| SchemaError {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    cfg.check()?;
    Ok(cfg)
}

pub fn parse(text: &str, overrides: &[(String, String)]) -> Result<RunConfig, SchemaError> {
    let mut doc: Value =
        serde_json::from_str(text).map_err(|e| schema("", format!("not a JSON document: {e}")))?;
    if !doc.is_object() {
        return Err(schema("", "the configuration must be a JSON object"));
    }
    for (path, raw) in overrides {
        apply_override(&mut doc, path, raw)?;
    }
    from_value(doc)
}

impl RunConfig {
    fn check(&self) -> Result<(), SchemaError> {
        self.system()?;
        self.bath()?;
        self.grid()?;
        if !(self.solver.lambda_c >= 0.0 && self.solver.lambda_c < 1.0) {
            return Err(schema("solver.lambda_c", "must lie in [0, 1)"));
        }
        if let Some(m) = self.solver.memory_depth {
            if m > self.grid.k {
                return Err(schema("solver.memory_depth", "must not exceed grid.k"));
            }
        }
        let t = &self.task;
        if let Some(n) = t.n_tau {
            if n == 0 || n > self.grid.k {
                return Err(schema("task.n_tau", "must lie in 1..=grid.k"));
            }
        }
        if let Some(a) = t.anchor {
            if a + self.n_tau() > self.grid.k {
                return Err(schema(
                    "task.anchor",
                    "anchor + n_tau must not exceed grid.k",
                ));
            }
        }
        if t.policies.is_empty() {
            return Err(schema("task.policies", "needs at least one policy"));
        }
        let det = &t.detuning;
        if det.points < 2 || !(det.max > det.min) {
            return Err(schema(
                "task.detuning",
                "needs max > min and at least 2 points",
            ));
        }
        if !(t.window_rate >= 0.0) {
            return Err(schema("task.window_rate", "must be >= 0"));
        }
        if !(t.asymmetry_gap >= 0.0) || !(t.resonance_half_width > 0.0) {
            return Err(schema(
                "task",
                "asymmetry_gap >= 0 and resonance_half_width > 0 required",
            ));
        }
        if t.alphas
            .as_ref()
            .is_some_and(|a| a.is_empty() || a.iter().any(|x| !(*x >= 0.0)))
        {
            return Err(schema("task.alphas", "needs non-negative couplings"));
        }
        if t.ks
            .as_ref()
            .is_some_and(|k| k.is_empty() || k.contains(&0))
        {
            return Err(schema("task.ks", "needs positive grid lengths"));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<SystemSpec, SchemaError> {
        let s = &self.system;
        let d = s.d;
        if d == 0 {
            return Err(schema("system.d", "must be positive"));
        }
        let h0 = match &s.h0 {
            Some(rows) => to_matrix(rows, d, "system.h0")?,
            None if d == 2 => pauli_x().scale(C64::new(0.5, 0.0)),
            None => return Err(schema("system.h0", "required when d != 2")),
        };
        let rho0 = match &s.rho0 {
            Some(rows) => to_matrix(rows, d, "system.rho0")?,
            None => Matrix::from_fn(d, d, |i, j| C64::new((i == 0 && j == 0) as u8 as f64, 0.0)),
        };
        SystemSpec::new(h0, s.coupling_eigenvalues.clone(), rho0)
            .map_err(|e| schema("system", e.to_string()))
    }

    pub fn beta(&self) -> Result<f64, SchemaError> {
        match (self.bath.temperature, self.bath.beta) {
            (Some(_), Some(_)) => Err(schema("bath", "give either temperature or beta, not both")),
            (Some(0.0), None) => Ok(f64::INFINITY),
            (Some(t), None) if t > 0.0 && t.is_finite() => Ok(1.0 / t),
            (Some(_), None) => Err(schema("bath.temperature", "must be finite and >= 0")),
            (None, Some(b)) => Ok(b),
            (None, None) => Err(schema("bath", "temperature or beta is required")),
        }
    }

    pub fn bath(&self) -> Result<BathSpec, SchemaError> {
        let b = &self.bath;
        let beta = self.beta()?;
        let spec = match &b.modes {
            Some(modes) => BathSpec::discrete(modes.clone(), beta),
            None => BathSpec::continuum(b.alpha, b.omega_c, b.nu, beta),
        };
        spec.map(|s| s.with_quad(b.quad))
            .map_err(|e| schema("bath", e.to_string()))
    }

    pub fn grid(&self) -> Result<TimeGrid, SchemaError> {
        TimeGrid::new(self.grid.dt, self.grid.k).map_err(|e| schema("grid", e.to_string()))
    }

    pub fn n_tau(&self) -> usize {
        self.task.n_tau.unwrap_or((self.grid.k / 2).max(1))
    }
}

//! Declarative experiment runner: a TOML config in, a deterministic report
//! out (JSON, plus flat CSV tables).
//!
//! Config schema (unknown keys are rejected everywhere):
//!
//! ```toml
//! task = "chi"            # chi | entropy | brin-katok | partition-build | smb-check
//!                         # | dimension | verify | appendix-hilbert | hamming-bounds
//! seed = 7                # mandatory
//! output = "out"          # optional, overridden by the CLI
//!
//! [system]                # SystemDescriptor, tagged by `type`
//! type = "toral-automorphism"
//! matrix = [[2, 1], [1, 1]]
//!
//! [oracle]                # lebesgue-torus | bernoulli { p } | markov { transition } | product
//! type = "lebesgue-torus"
//!
//! [chi]                   # one section per task, named after it
//! r_schedule = [0.2, 0.1, 0.05]
//! n_max = 24
//! sample_points = 2000
//! probes = 64
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dimension::{
    box_counting_dimension, local_dimension_lower, sample_unstable_set, verify_main_inequality, Direction, VerifyConfig,
};
use crate::entropy::{block_entropy_rate, brin_katok_local, partition_entropy, BrinKatokMode, McBudget};
use crate::error::{Error, Result};
use crate::lyapunov::{estimate_chi, ChiConfig};
use crate::partitions::{
    check_atom_in_unstable, construct_subordinate_partition, disintegrate_window, hamming_bounds_scan, local_smb_check,
    shift_lemma_check, FinitePartition, SubordinateRequest,
};
use crate::rng;
use crate::systems::{operator_norm_power, sample_point, MeasureOracle, ShiftMetric, SystemDescriptor, WeightSequence};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Chi,
    Entropy,
    BrinKatok,
    PartitionBuild,
    SmbCheck,
    Dimension,
    Verify,
    AppendixHilbert,
    HammingBounds,
}

impl Task {
    pub const ALL: [Task; 9] = [
        Task::Chi,
        Task::Entropy,
        Task::BrinKatok,
        Task::PartitionBuild,
        Task::SmbCheck,
        Task::Dimension,
        Task::Verify,
        Task::AppendixHilbert,
        Task::HammingBounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Chi => "chi",
            Task::Entropy => "entropy",
            Task::BrinKatok => "brin-katok",
            Task::PartitionBuild => "partition-build",
            Task::SmbCheck => "smb-check",
            Task::Dimension => "dimension",
            Task::Verify => "verify",
            Task::AppendixHilbert => "appendix-hilbert",
            Task::HammingBounds => "hamming-bounds",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Task::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| cfg_err("task", format!("unknown task {s:?}")))
    }
}

/// Measure as written in a config; Markov stationary vectors are derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OracleSpec {
    LebesgueTorus,
    Bernoulli { p: Vec<f64> },
    Markov { transition: Vec<Vec<f64>> },
    Product { left: Box<OracleSpec>, right: Box<OracleSpec> },
}

impl OracleSpec {
    pub fn build(&self) -> Result<MeasureOracle> {
        match self {
            OracleSpec::LebesgueTorus => Ok(MeasureOracle::LebesgueTorus),
            OracleSpec::Bernoulli { p } => MeasureOracle::bernoulli(p.clone()),
            OracleSpec::Markov { transition } => MeasureOracle::markov(transition.clone()),
            OracleSpec::Product { left, right } => {
                Ok(MeasureOracle::Product { left: Box::new(left.build()?), right: Box::new(right.build()?) })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiSection {
    pub r_schedule: Vec<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    pub sample_points: usize,
    pub probes: usize,
}

fn default_n_max() -> usize {
    64
}

impl ChiSection {
    fn to_config(&self, seed: u64) -> ChiConfig {
        ChiConfig {
            r_schedule: self.r_schedule.clone(),
            n_schedule: (1..=self.n_max).collect(),
            sample_points: self.sample_points,
            probes: self.probes,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySection {
    /// Coordinates of the generating cylinder partition.
    #[serde(default = "default_coords")]
    pub coords: Vec<i64>,
    pub n_schedule: Vec<usize>,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
}

fn default_coords() -> Vec<i64> {
    vec![0]
}

fn default_mc_samples() -> usize {
    100_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BkMode {
    ExactCylinder,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrinKatokSection {
    pub eps_schedule: Vec<f64>,
    pub n_schedule: Vec<usize>,
    pub mode: BkMode,
    #[serde(default = "default_mc_samples")]
    pub samples: usize,
    #[serde(default = "one")]
    pub base_points: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSection {
    pub delta: f64,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_past_depth")]
    pub past_depth: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_pairs")]
    pub sample_pairs: usize,
}

fn default_depth() -> usize {
    3
}
fn default_past_depth() -> usize {
    8
}
fn default_tol() -> f64 {
    0.1
}
fn default_k_max() -> usize {
    16
}
fn default_horizon() -> usize {
    50
}
fn default_pairs() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmbSection {
    #[serde(default = "default_past_depth")]
    pub past_depth: usize,
    pub n_schedule: Vec<usize>,
    pub samples: usize,
    #[serde(default = "default_smb_tolerance")]
    pub tolerance: f64,
    /// Also run the shift comparison with this `k`.
    pub shift_k: Option<usize>,
}

fn default_smb_tolerance() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionSection {
    pub delta: f64,
    #[serde(default = "default_back_horizon")]
    pub back_horizon: usize,
    pub budget: usize,
    pub scales: Vec<f64>,
}

fn default_back_horizon() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_direction")]
    pub direction: Direction,
    pub chi: ChiSection,
    pub delta: f64,
    #[serde(default = "default_back_horizon")]
    pub back_horizon: usize,
    pub budget: usize,
    #[serde(default = "default_base_points")]
    pub base_points: usize,
    pub scales: Vec<f64>,
    #[serde(default = "default_chi_floor")]
    pub chi_floor: f64,
    #[serde(default = "default_slack")]
    pub slack_tolerance: f64,
    pub h_value: Option<f64>,
}

fn default_direction() -> Direction {
    Direction::Forward
}
fn default_base_points() -> usize {
    20
}
fn default_chi_floor() -> f64 {
    0.05
}
fn default_slack() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppendixSection {
    /// Powers `k` at which `||T^k||` is evaluated.
    pub k_values: Vec<u64>,
    /// Index range `|n| <= window` searched for the maximiser.
    #[serde(default = "default_norm_window")]
    pub window: i64,
    /// Grid size for the weight-sequence checks.
    #[serde(default = "default_weight_horizon")]
    pub weight_horizon: usize,
    /// Monotone decrease of `(1/k) log ||T^k||` is checked for `k` beyond this.
    #[serde(default = "default_monotone_from")]
    pub monotone_from: u64,
    pub chi: Option<ChiSection>,
}

fn default_norm_window() -> i64 {
    4096
}
fn default_weight_horizon() -> usize {
    256
}
fn default_monotone_from() -> u64 {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HammingSection {
    pub n_min: usize,
    pub n_max: usize,
    #[serde(default = "two")]
    pub alphabet_size: usize,
    pub eps: f64,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub seed: u64,
    pub system: SystemDescriptor,
    pub oracle: OracleSpec,
    pub output: Option<PathBuf>,
    pub chi: Option<ChiSection>,
    pub entropy: Option<EntropySection>,
    pub brin_katok: Option<BrinKatokSection>,
    pub partition: Option<PartitionSection>,
    pub smb: Option<SmbSection>,
    pub dimension: Option<DimensionSection>,
    pub verify: Option<VerifySection>,
    pub appendix_hilbert: Option<AppendixSection>,
    pub hamming: Option<HammingSection>,
}

fn cfg_err(field: &str, message: impl Into<String>) -> Error {
    Error::ConfigInvalid { field: field.into(), message: message.into() }
}

fn decreasing(field: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() || v.windows(2).any(|w| w[0] <= w[1]) || v.iter().any(|x| !(*x > 0.0)) {
        return Err(cfg_err(field, "must be nonempty, positive and strictly decreasing"));
    }
    Ok(())
}

fn increasing(field: &str, v: &[usize]) -> Result<()> {
    if v.is_empty() || v[0] == 0 || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(cfg_err(field, "must be nonempty, start at >= 1 and strictly increase"));
    }
    Ok(())
}

fn positive(field: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(cfg_err(field, "must be positive"));
    }
    Ok(())
}

fn check_chi(prefix: &str, c: &ChiSection) -> Result<()> {
    decreasing(&format!("{prefix}.r_schedule"), &c.r_schedule)?;
    positive(&format!("{prefix}.n_max"), c.n_max)?;
    positive(&format!("{prefix}.sample_points"), c.sample_points)?;
    positive(&format!("{prefix}.probes"), c.probes)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| cfg_err("config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T> {
        s.as_ref().ok_or_else(|| cfg_err(name, format!("task {} needs a [{name}] section", self.task.name())))
    }

    /// Field-level checks; the owning modules re-validate their inputs.
    pub fn validate(&self) -> Result<()> {
        self.system.validate().map_err(|e| cfg_err("system", e.to_string()))?;
        self.oracle.build().map_err(|e| cfg_err("oracle", e.to_string()))?;
        match self.task {
            Task::Chi => check_chi("chi", self.section(&self.chi, "chi")?),
            Task::Entropy => {
                let e = self.section(&self.entropy, "entropy")?;
                increasing("entropy.n_schedule", &e.n_schedule)?;
                positive("entropy.mc_samples", e.mc_samples)?;
                if e.coords.is_empty() {
                    return Err(cfg_err("entropy.coords", "must be nonempty"));
                }
                Ok(())
            }
            Task::BrinKatok => {
                let b = self.section(&self.brin_katok, "brin_katok")?;
                decreasing("brin_katok.eps_schedule", &b.eps_schedule)?;
                increasing("brin_katok.n_schedule", &b.n_schedule)?;
                positive("brin_katok.samples", b.samples)?;
                positive("brin_katok.base_points", b.base_points)
            }
            Task::PartitionBuild => {
                let p = self.section(&self.partition, "partition")?;
                if !(p.delta > 0.0) {
                    return Err(cfg_err("partition.delta", "must be positive"));
                }
                positive("partition.depth", p.depth)?;
                positive("partition.past_depth", p.past_depth)?;
                positive("partition.sample_pairs", p.sample_pairs)
            }
            Task::SmbCheck => {
                let s = self.section(&self.smb, "smb")?;
                increasing("smb.n_schedule", &s.n_schedule)?;
                positive("smb.samples", s.samples)
            }
            Task::Dimension => {
                let d = self.section(&self.dimension, "dimension")?;
                decreasing("dimension.scales", &d.scales)?;
                positive("dimension.budget", d.budget)
            }
            Task::Verify => {
                let v = self.section(&self.verify, "verify")?;
                check_chi("verify.chi", &v.chi)?;
                decreasing("verify.scales", &v.scales)?;
                positive("verify.budget", v.budget)?;
                positive("verify.base_points", v.base_points)
            }
            Task::AppendixHilbert => {
                let a = self.section(&self.appendix_hilbert, "appendix_hilbert")?;
                if a.k_values.is_empty() || a.k_values[0] == 0 || a.k_values.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(cfg_err("appendix_hilbert.k_values", "must be nonempty, start at >= 1 and strictly increase"));
                }
                if !matches!(self.system, SystemDescriptor::FullShift { metric: ShiftMetric::WeightedL2 { .. }, .. }) {
                    return Err(cfg_err("system", "appendix-hilbert needs the weighted shift"));
                }
                match &a.chi {
                    Some(c) => check_chi("appendix_hilbert.chi", c),
                    None => Ok(()),
                }
            }
            Task::HammingBounds => {
                let h = self.section(&self.hamming, "hamming")?;
                if h.n_min == 0 || h.n_min > h.n_max {
                    return Err(cfg_err("hamming.n_min", "need 1 <= n_min <= n_max"));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Clean,
    Flagged,
    Failed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Clean => 0,
            Status::Flagged => 2,
            Status::Failed => 1,
        }
    }
}

/// Flat numeric table for CSV output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub toolkit_version: &'static str,
    pub task: Task,
    pub config: ExperimentConfig,
    /// Design parameters the result depends on (depths, tolerances, floors).
    pub parameters: Value,
    pub payload: Value,
    pub diagnostics: Vec<String>,
    pub status: Status,
    pub error: Option<String>,
    pub tables: Vec<Table>,
    pub wall_clock_seconds: f64,
}

impl Report {
    /// Everything except the wall clock, for reproducibility comparisons.
    pub fn numeric_bytes(&self) -> Vec<u8> {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().unwrap().remove("wall_clock_seconds");
        serde_json::to_vec(&v).unwrap()
    }
}

struct Outcome {
    parameters: Value,
    payload: Value,
    diagnostics: Vec<String>,
    tables: Vec<Table>,
}

/// Validate, dispatch to the owning module and wrap the result. Invalid
/// configs are errors; failures inside a task become a `Failed` report.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let (status, error, out) = match dispatch(cfg) {
        Ok(o) => (if o.diagnostics.is_empty() { Status::Clean } else { Status::Flagged }, None, o),
        Err(e) => (
            Status::Failed,
            Some(e.to_string()),
            Outcome { parameters: Value::Null, payload: Value::Null, diagnostics: vec![format!("{} failed", cfg.task.name())], tables: vec![] },
        ),
    };
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        toolkit_version: TOOLKIT_VERSION,
        task: cfg.task,
        config: cfg.clone(),
        parameters: out.parameters,
        payload: out.payload,
        diagnostics: out.diagnostics,
        status,
        error,
        tables: out.tables,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("payload serializes")
}

fn alphabet(sys: &SystemDescriptor) -> Result<u8> {
    match sys {
        SystemDescriptor::FullShift { alphabet_size, .. } => Ok(*alphabet_size),
        s => Err(cfg_err("system", format!("task needs a shift, got {}", s.name()))),
    }
}

fn dispatch(cfg: &ExperimentConfig) -> Result<Outcome> {
    let sys = &cfg.system;
    let oracle = cfg.oracle.build()?;
    let mut diagnostics = Vec::new();
    let mut tables = Vec::new();
    let (parameters, payload) = match cfg.task {
        Task::Chi => {
            let c = cfg.chi.as_ref().unwrap().to_config(cfg.seed);
            let est = estimate_chi(sys, &oracle, &c)?;
            if !est.diagnostics.monotone_in_r {
                diagnostics.push("Lambda^r not monotone in r".into());
            }
            if est.diagnostics.integrability_flag {
                diagnostics.push("log+ L_1 tail looks non-integrable".into());
            }
            let mut t = Table::new("chi", &["r", "n", "phi_n_over_n", "Lambda_r"]);
            for lvl in &est.per_r {
                for (n, phi) in lvl.series.n_schedule.iter().zip(&lvl.series.values) {
                    t.rows.push(vec![lvl.r, *n as f64, phi / *n as f64, lvl.lambda]);
                }
            }
            tables.push(t);
            (json!({ "probe_radius_floor": crate::geometry::probe_radius_floor(sys), "n_max": c.n_schedule.last() }), to_value(&est))
        }
        Task::Entropy => {
            let e = cfg.entropy.as_ref().unwrap();
            let alpha = FinitePartition::cylinder(e.coords.iter().copied(), alphabet(sys)?);
            let mut t = Table::new("entropy", &["n", "value", "stderr", "exact"]);
            let mut rows = Vec::new();
            for &n in &e.n_schedule {
                let est = block_entropy_rate(&oracle, &alpha, n, McBudget { samples: e.mc_samples, seed: cfg.seed })?;
                t.rows.push(vec![n as f64, est.value, est.stderr.unwrap_or(0.0), (est.stderr.is_none()) as u8 as f64]);
                rows.push(est);
            }
            tables.push(t);
            let target = oracle.entropy_rate().ok();
            (
                json!({ "atom_budget": crate::partitions::ATOM_BUDGET, "mc_samples": e.mc_samples }),
                json!({ "partition_entropy": partition_entropy(&alpha, &oracle)?, "rates": rows, "closed_form_rate": target }),
            )
        }
        Task::BrinKatok => {
            let b = cfg.brin_katok.as_ref().unwrap();
            let mode = match b.mode {
                BkMode::ExactCylinder => BrinKatokMode::ExactCylinder,
                BkMode::MonteCarlo => BrinKatokMode::MonteCarlo { samples: b.samples },
            };
            let reports = (0..b.base_points)
                .map(|i| {
                    let x = sample_point(sys, &oracle, rng::derive_seed(cfg.seed, i as u64))?;
                    brin_katok_local(sys, &oracle, &x, &b.eps_schedule, &b.n_schedule, mode, rng::derive_seed(cfg.seed ^ 0xB4, i as u64))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut t = Table::new("brin_katok", &["base_index", "eps", "n", "value"]);
            for (i, r) in reports.iter().enumerate() {
                for c in &r.per_eps {
                    for (n, v) in c.n.iter().zip(&c.values) {
                        t.rows.push(vec![i as f64, c.eps, *n as f64, v.unwrap_or(f64::NAN)]);
                    }
                }
                if r.per_eps.iter().any(|c| !c.reliable) {
                    diagnostics.push(format!("base point {i}: some scales below the hit floor"));
                }
            }
            tables.push(t);
            (json!({ "hit_floor": crate::entropy::HIT_FLOOR }), json!({ "points": reports }))
        }
        Task::PartitionBuild => {
            let p = cfg.partition.as_ref().unwrap();
            let mut req = SubordinateRequest::with_defaults(p.delta, alphabet(sys)?);
            req.depth = p.depth;
            req.betas = SubordinateRequest::default_chain(p.depth, alphabet(sys)?);
            req.past_depth = p.past_depth;
            req.tol = p.tol;
            req.k_max = p.k_max;
            let plan = construct_subordinate_partition(sys, &oracle, &req)?;
            let x = sample_point(sys, &oracle, cfg.seed)?;
            let check = check_atom_in_unstable(sys, &plan, &x, p.horizon, p.sample_pairs, rng::derive_seed(cfg.seed, 1))?;
            if check.total_violations() > 0 {
                diagnostics.push(format!("{} atom-inclusion violations", check.total_violations()));
            }
            let mut t = Table::new("residuals", &["q", "p", "lhs", "lhs_half_depth", "rhs"]);
            for r in &plan.residuals {
                t.rows.push(vec![r.q as f64, r.p as f64, r.lhs, r.lhs_half_depth, r.rhs]);
            }
            tables.push(t);
            (
                json!({ "Q": p.depth, "P": p.past_depth, "tol": p.tol, "k_max": p.k_max }),
                json!({ "plan": plan, "atom_check": check }),
            )
        }
        Task::SmbCheck => {
            let s = cfg.smb.as_ref().unwrap();
            let alpha = FinitePartition::time_zero(alphabet(sys)?);
            let smb = local_smb_check(&oracle, s.past_depth, &alpha, &s.n_schedule, s.samples, s.tolerance, cfg.seed)?;
            if !smb.converged {
                diagnostics.push("ratio not within tolerance of the rate".into());
            }
            let mut t = Table::new("smb", &["n", "mean", "stderr", "min", "max"]);
            for r in &smb.rows {
                t.rows.push(vec![r.n as f64, r.mean, r.stderr, r.min, r.max]);
            }
            tables.push(t);
            let shift = match s.shift_k {
                Some(k) => {
                    let r = shift_lemma_check(&oracle, &alpha, k, &s.n_schedule, s.samples, s.tolerance, rng::derive_seed(cfg.seed, 1))?;
                    if !r.agree {
                        diagnostics.push("shifted and base ratio sequences disagree".into());
                    }
                    Some(r)
                }
                None => None,
            };
            (json!({ "P": s.past_depth, "tolerance": s.tolerance }), json!({ "smb": smb, "shift_lemma": shift }))
        }
        Task::Dimension => {
            let d = cfg.dimension.as_ref().unwrap();
            let x = sample_point(sys, &oracle, cfg.seed)?;
            let cloud = sample_unstable_set(sys, &oracle, &x, d.delta, d.back_horizon, d.budget, rng::derive_seed(cfg.seed, 1))?;
            let est = box_counting_dimension(&cloud, &d.scales)?;
            let local = match (sys, cloud.pinned_through) {
                (SystemDescriptor::FullShift { window, .. }, Some(f)) => {
                    local_dimension_lower(&cloud, Some(&disintegrate_window(&oracle, -window, f, &x)?), &x, &d.scales)?
                }
                _ => local_dimension_lower(&cloud, None, &x, &d.scales)?,
            };
            if est.slope_ci.0 < 0.0 {
                diagnostics.push("box-count slope interval reaches below zero".into());
            }
            let mut t = Table::new("dimension", &["scale", "count", "log_scale", "log_count"]);
            for (s, c) in est.scales.iter().zip(&est.values) {
                t.rows.push(vec![*s, *c, s.ln(), c.ln()]);
            }
            tables.push(t);
            (
                json!({ "delta": d.delta, "back_horizon": d.back_horizon, "admission_tolerance": cloud.admission_tolerance }),
                json!({
                    "cloud": { "size": cloud.points.len(), "candidates": cloud.candidates, "rejected": cloud.rejected,
                               "tightest_failing_n": cloud.tightest_failing_n, "enumeration_depth": cloud.enumeration_depth },
                    "box_count": est,
                    "local_mass": local,
                }),
            )
        }
        Task::Verify => {
            let v = cfg.verify.as_ref().unwrap();
            let vc = VerifyConfig {
                chi: v.chi.to_config(rng::derive_seed(cfg.seed, 0)),
                delta: v.delta,
                back_horizon: v.back_horizon,
                budget: v.budget,
                base_points: v.base_points,
                scales: v.scales.clone(),
                chi_floor: v.chi_floor,
                slack_tolerance: v.slack_tolerance,
                h_value: v.h_value,
                seed: cfg.seed,
            };
            let r = verify_main_inequality(sys, &oracle, v.direction, &vc)?;
            if !r.holds {
                diagnostics.push("inequality proxy does not hold".into());
            }
            let mut t = Table::new("verify", &["base_index", "dim", "ci_lo", "ci_hi", "local_dim", "holds"]);
            for p in &r.per_point {
                t.rows.push(vec![p.base_index as f64, p.dim, p.slope_ci.0, p.slope_ci.1, p.local_dim.unwrap_or(f64::NAN), p.holds as u8 as f64]);
            }
            tables.push(t);
            (
                json!({ "chi_floor": v.chi_floor, "slack_tolerance": v.slack_tolerance, "delta": v.delta,
                        "back_horizon": v.back_horizon, "admission_tolerance": v.delta / 8.0 }),
                to_value(&r),
            )
        }
        Task::AppendixHilbert => {
            let a = cfg.appendix_hilbert.as_ref().unwrap();
            let SystemDescriptor::FullShift { metric: ShiftMetric::WeightedL2 { weights }, .. } = sys else { unreachable!() };
            let w: &WeightSequence = weights;
            let norms: Vec<_> = a.k_values.iter().map(|&k| operator_norm_power(w, k, a.window)).collect();
            let rates: Vec<f64> = norms.iter().map(|n| n.value.ln() / n.k as f64).collect();
            let tail: Vec<f64> = a.k_values.iter().zip(&rates).filter(|(k, _)| **k > a.monotone_from).map(|(_, r)| *r).collect();
            let monotone = tail.windows(2).all(|p| p[1] <= p[0]);
            if !monotone {
                diagnostics.push(format!("(1/k) log ||T^k|| not monotone beyond k = {}", a.monotone_from));
            }
            if norms.iter().any(|n| !n.attained_in_range) {
                diagnostics.push("norm maximiser at the window edge".into());
            }
            let chi = match &a.chi {
                Some(c) => Some(estimate_chi(sys, &oracle, &c.to_config(cfg.seed))?),
                None => None,
            };
            let mut t = Table::new("operator_norms", &["k", "norm", "log_norm_over_k"]);
            for (n, r) in norms.iter().zip(&rates) {
                t.rows.push(vec![n.k as f64, n.value, *r]);
            }
            tables.push(t);
            (
                json!({ "window": a.window, "monotone_from": a.monotone_from }),
                json!({ "weights": w.check(a.weight_horizon), "norms": norms, "log_norm_over_k": rates,
                        "monotone_beyond": monotone, "chi": chi, "entropy_rate": oracle.entropy_rate().ok() }),
            )
        }
        Task::HammingBounds => {
            let h = cfg.hamming.as_ref().unwrap();
            let scan = hamming_bounds_scan(h.n_min..=h.n_max, h.alphabet_size, h.eps)?;
            if !scan.crude_failures.is_empty() {
                diagnostics.push(format!("crude counting bound fails at n = {:?}", scan.crude_failures));
            }
            let mut t = Table::new("hamming", &["n", "m", "exact_count", "stirling_bound", "crude_lhs", "crude_bound"]);
            for r in &scan.rows {
                t.rows.push(vec![r.n as f64, r.m as f64, r.exact_count as f64, r.stirling_bound, r.crude_lhs as f64, r.crude_bound]);
            }
            tables.push(t);
            (json!({ "radius_convention": scan.rows.first().map(|r| r.radius_convention) }), to_value(&scan))
        }
    };
    Ok(Outcome { parameters, payload, diagnostics, tables })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(cfg_err("format", format!("unknown format {other:?}"))),
        }
    }
}

/// Write `report.json` and one `<table>.csv` per table into `dir`.
pub fn emit_report(report: &Report, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if formats.contains(&Format::Json) {
        let p = dir.join("report.json");
        fs::write(&p, serde_json::to_string_pretty(report).expect("report serializes"))?;
        written.push(p);
    }
    if formats.contains(&Format::Csv) {
        for t in &report.tables {
            let p = dir.join(format!("{}.csv", t.name));
            let mut w = csv::Writer::from_path(&p).map_err(|e| Error::Io(e.to_string()))?;
            w.write_record(&t.columns).map_err(|e| Error::Io(e.to_string()))?;
            for row in &t.rows {
                w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| Error::Io(e.to_string()))?;
            }
            w.flush()?;
            written.push(p);
        }
    }
    Ok(written)
}

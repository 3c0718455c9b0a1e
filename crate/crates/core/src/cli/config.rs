//! Experiment configuration files (TOML) and their validation.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::scatter::{FermiWindow, ScattererModel, TableModel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    VneeScaling,
    CoefficientSweep,
    ResolvedProfile,
    Equipartition,
    GenfunDeviation,
    Friedel,
    TwoScatterer,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Self::VneeScaling,
        Self::CoefficientSweep,
        Self::ResolvedProfile,
        Self::Equipartition,
        Self::GenfunDeviation,
        Self::Friedel,
        Self::TwoScatterer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::VneeScaling => "vnee_scaling",
            Self::CoefficientSweep => "coefficient_sweep",
            Self::ResolvedProfile => "resolved_profile",
            Self::Equipartition => "equipartition",
            Self::GenfunDeviation => "genfun_deviation",
            Self::Friedel => "friedel",
            Self::TwoScatterer => "two_scatterer",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Self::VneeScaling => "vNEE S(L): asymptotic vs exact, per window and length",
            Self::CoefficientSweep => "linear/log/constant coefficients of ln Z_n(α) or of the vNEE",
            Self::ResolvedProfile => "Z_n(Q) and S(Q) near the mean charge: analytic inversion vs exact",
            Self::Equipartition => "post-projection entropy σ(Q) and its step per unit charge",
            Self::GenfunDeviation => "ln Z_n(α) asymptotic vs exact over an α grid",
            Self::Friedel => "S(d) − S(∞) with envelope and power-law fits",
            Self::TwoScatterer => "vNEE between two scatterers with a linear fit against C_lin",
        }
    }

    fn needs(self) -> Needs {
        let base = Needs { lengths: true, ..Needs::default() };
        match self {
            Self::VneeScaling | Self::Equipartition => base,
            Self::CoefficientSweep => Needs { lengths: false, ..Needs::default() },
            Self::ResolvedProfile => Needs { orders: true, ..base },
            Self::GenfunDeviation => Needs { orders: true, alphas: true, ..base },
            Self::Friedel => Needs { distances: true, ..base },
            Self::TwoScatterer => Needs { right: true, ..base },
        }
    }
}

#[derive(Default)]
struct Needs {
    lengths: bool,
    orders: bool,
    alphas: bool,
    distances: bool,
    right: bool,
}

/// A momentum in radians, or in units of π as `{ pi = 0.5 }`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Momentum {
    Radians(f64),
    PiUnits { pi: f64 },
}

impl Momentum {
    pub fn value(self) -> f64 {
        match self {
            Self::Radians(k) => k,
            Self::PiUnits { pi } => pi * PI,
        }
    }
}

/// Integers as an explicit list or an inclusive range.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntSweep {
    List(Vec<i64>),
    Range { start: i64, stop: i64, step: Option<i64> },
}

impl IntSweep {
    fn values(&self) -> Result<Vec<i64>, String> {
        match self {
            Self::List(v) => Ok(v.clone()),
            Self::Range { start, stop, step } => {
                let step = step.unwrap_or(1);
                if step <= 0 {
                    return Err(format!("step must be positive (got {step})"));
                }
                if stop < start {
                    return Err(format!("stop {stop} is below start {start}"));
                }
                Ok((*start..=*stop).step_by(step as usize).collect())
            }
        }
    }
}

/// Reals as an explicit list or `count` evenly spaced points from `min` to `max`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RealSweep {
    List(Vec<f64>),
    Grid { min: f64, max: f64, count: usize },
}

impl RealSweep {
    fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            Self::List(v) => Ok(v.clone()),
            Self::Grid { min, max, count } => match count {
                0 => Err("count must be at least 1".into()),
                1 => Ok(vec![*min]),
                c => Ok((0..*c).map(|i| min + (max - min) * i as f64 / (*c - 1) as f64).collect()),
            },
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererSpec {
    pub eps0_over_t: Option<f64>,
    /// CSV with a `k,t2` header; relative paths are taken from the config file's directory.
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub k_fr: Momentum,
    /// Offsets k_fl − k_fr.
    pub dk: Option<Vec<f64>>,
    pub k_fl: Option<Vec<Momentum>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    #[default]
    GenFun,
    Vnee,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub l: Option<IntSweep>,
    pub n: Option<Vec<f64>>,
    pub alpha: Option<RealSweep>,
    pub d: Option<IntSweep>,
    /// coefficient_sweep: coefficients of ln Z_n(α) or of the vNEE.
    pub quantity: Option<Quantity>,
    /// Charges listed on each side of the rounded mean.
    pub q_width: Option<i64>,
    /// friedel: number of log-spaced blocks of consecutive distances.
    pub blocks: Option<usize>,
    /// friedel: distances per block.
    pub block_len: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Relative paths are taken from the config file's directory.
    pub path: PathBuf,
    pub format: Format,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub scatterer: Option<ScattererSpec>,
    /// two_scatterer: the scatterer right of the subsystem; `scatterer` is the left one.
    pub right_scatterer: Option<ScattererSpec>,
    pub window: WindowSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    pub output: OutputSpec,
}

/// A scatterer model together with a label for output rows.
#[derive(Debug, Clone)]
pub struct NamedModel {
    pub label: String,
    pub model: ScattererModel,
}

/// A validated configuration, ready to run.
#[derive(Debug, Clone)]
pub struct Plan {
    pub experiment: Experiment,
    pub scatterer: NamedModel,
    pub right: Option<NamedModel>,
    pub windows: Vec<FermiWindow>,
    pub lengths: Vec<usize>,
    pub orders: Vec<f64>,
    pub alphas: Vec<f64>,
    pub distances: Vec<i64>,
    pub quantity: Quantity,
    pub q_width: i64,
    pub blocks: usize,
    pub block_len: usize,
    pub output: OutputSpec,
    /// SHA-256 of the canonical config plus any table files.
    pub config_hash: String,
}

/// Every problem found in a config, one per offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError {
    pub problems: Vec<(String, String)>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.problems.len())?;
        for (field, msg) in &self.problems {
            writeln!(f, "  {field}: {msg}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// Reads and validates a config file.
pub fn load(path: &Path) -> Result<Plan, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    from_toml_str(&text, path)
}

/// Parses and validates config text as if read from `path`.
pub fn from_toml_str(text: &str, path: &Path) -> Result<Plan, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(validate(&raw, base)?)
}

struct Collector(Vec<(String, String)>);

impl Collector {
    fn push(&mut self, field: &str, msg: impl Into<String>) {
        self.0.push((field.to_string(), msg.into()));
    }
}

fn momentum_ok(k: f64) -> bool {
    (0.0..=PI).contains(&k)
}

fn read_table(path: &Path) -> Result<(TableModel, Vec<u8>), String> {
    let bytes = fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(bytes.as_slice());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    if headers.len() != 2 || &headers[0] != "k" || &headers[1] != "t2" {
        return Err(format!("{}: expected header `k,t2`", path.display()));
    }
    let mut points = Vec::new();
    for (i, rec) in reader.deserialize::<(f64, f64)>().enumerate() {
        points.push(rec.map_err(|e| format!("{}: row {}: {e}", path.display(), i + 1))?);
    }
    let table = TableModel::new(&points).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((table, bytes))
}

fn scatterer(spec: Option<&ScattererSpec>, field: &str, base: &Path, errs: &mut Collector, hasher: &mut Sha256) -> Option<NamedModel> {
    let Some(spec) = spec else {
        errs.push(field, "missing");
        return None;
    };
    match (spec.eps0_over_t, &spec.table) {
        (Some(eps), None) => {
            if !eps.is_finite() {
                errs.push(&format!("{field}.eps0_over_t"), "must be finite");
                return None;
            }
            Some(NamedModel { label: format!("impurity(eps0/t={eps})"), model: ScattererModel::impurity(eps) })
        }
        (None, Some(path)) => {
            let full = base.join(path);
            match read_table(&full) {
                Ok((table, bytes)) => {
                    hasher.update(&bytes);
                    Some(NamedModel { label: format!("table({})", path.display()), model: ScattererModel::Table(table) })
                }
                Err(msg) => {
                    errs.push(&format!("{field}.table"), msg);
                    None
                }
            }
        }
        _ => {
            errs.push(field, "give exactly one of eps0_over_t or table");
            None
        }
    }
}

/// Checks every field and collects all problems before failing.
pub fn validate(raw: &RawConfig, base: &Path) -> Result<Plan, ValidationError> {
    let mut errs = Collector(Vec::new());
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(raw).expect("config serializes"));

    if raw.schema_version != SCHEMA_VERSION {
        errs.push("schema_version", format!("unsupported version {} (expected {SCHEMA_VERSION})", raw.schema_version));
    }
    let needs = raw.experiment.needs();
    let left = scatterer(raw.scatterer.as_ref(), "scatterer", base, &mut errs, &mut hasher);
    let right = if needs.right {
        scatterer(raw.right_scatterer.as_ref(), "right_scatterer", base, &mut errs, &mut hasher)
    } else {
        if raw.right_scatterer.is_some() {
            errs.push("right_scatterer", format!("only used by two_scatterer, not {}", raw.experiment.name()));
        }
        None
    };

    let k_fr = raw.window.k_fr.value();
    if !momentum_ok(k_fr) {
        errs.push("window.k_fr", format!("{k_fr} outside [0, π]"));
    }
    let k_fls: Vec<f64> = match (&raw.window.dk, &raw.window.k_fl) {
        (Some(dk), None) => dk.iter().map(|d| k_fr + d).collect(),
        (None, Some(k)) => k.iter().map(|m| m.value()).collect(),
        _ => {
            errs.push("window", "give exactly one of dk or k_fl");
            Vec::new()
        }
    };
    if k_fls.is_empty() && (raw.window.dk.is_some() || raw.window.k_fl.is_some()) {
        errs.push("window", "no windows listed");
    }
    let mut windows = Vec::new();
    for (i, &k_fl) in k_fls.iter().enumerate() {
        if !momentum_ok(k_fl) {
            errs.push(&format!("window.k_fl[{i}]"), format!("{k_fl} outside [0, π]"));
        } else if momentum_ok(k_fr) {
            windows.push(FermiWindow::new(k_fl, k_fr).expect("momenta checked"));
        }
    }

    let sweep = &raw.sweep;
    let mut lengths = Vec::new();
    match (&sweep.l, needs.lengths) {
        (Some(l), true) => match l.values() {
            Ok(v) if v.is_empty() => errs.push("sweep.l", "empty"),
            Ok(v) => {
                for (i, x) in v.iter().enumerate() {
                    if *x < 1 {
                        errs.push(&format!("sweep.l[{i}]"), format!("L must be at least 1 (got {x})"));
                    }
                }
                lengths = v.into_iter().filter(|&x| x >= 1).map(|x| x as usize).collect();
            }
            Err(msg) => errs.push("sweep.l", msg),
        },
        (None, true) => errs.push("sweep.l", "missing"),
        (Some(_), false) => errs.push("sweep.l", format!("not used by {}", raw.experiment.name())),
        (None, false) => {}
    }

    let quantity = sweep.quantity.unwrap_or_default();
    let wants_orders = needs.orders || (raw.experiment == Experiment::CoefficientSweep && quantity == Quantity::GenFun);
    let orders = match (&sweep.n, wants_orders) {
        (Some(n), true) => {
            if n.is_empty() {
                errs.push("sweep.n", "empty");
            }
            for (i, x) in n.iter().enumerate() {
                if !(*x > 0.0 && x.is_finite()) {
                    errs.push(&format!("sweep.n[{i}]"), format!("Rényi order must be positive (got {x})"));
                }
            }
            n.clone()
        }
        (None, true) => {
            errs.push("sweep.n", "missing");
            Vec::new()
        }
        (Some(_), false) => {
            errs.push("sweep.n", format!("not used by this {} configuration", raw.experiment.name()));
            Vec::new()
        }
        (None, false) => Vec::new(),
    };

    let wants_alphas = needs.alphas || (raw.experiment == Experiment::CoefficientSweep && quantity == Quantity::GenFun);
    let alphas = match (&sweep.alpha, wants_alphas) {
        (Some(a), true) => match a.values() {
            Ok(v) => {
                for (i, x) in v.iter().enumerate() {
                    if !(x.abs() <= PI) {
                        errs.push(&format!("sweep.alpha[{i}]"), format!("{x} outside [−π, π]"));
                    }
                }
                v
            }
            Err(msg) => {
                errs.push("sweep.alpha", msg);
                Vec::new()
            }
        },
        (None, true) => {
            errs.push("sweep.alpha", "missing");
            Vec::new()
        }
        (Some(_), false) => {
            errs.push("sweep.alpha", format!("not used by this {} configuration", raw.experiment.name()));
            Vec::new()
        }
        (None, false) => Vec::new(),
    };

    let distances = match (&sweep.d, needs.distances) {
        (Some(d), true) => match d.values() {
            Ok(v) => {
                if v.len() < 2 {
                    errs.push("sweep.d", "need at least two distances");
                }
                for (i, x) in v.iter().enumerate() {
                    if *x < 1 {
                        errs.push(&format!("sweep.d[{i}]"), format!("distance must be at least 1 (got {x})"));
                    }
                }
                v
            }
            Err(msg) => {
                errs.push("sweep.d", msg);
                Vec::new()
            }
        },
        (None, true) => {
            errs.push("sweep.d", "missing");
            Vec::new()
        }
        (Some(_), false) => {
            errs.push("sweep.d", format!("not used by {}", raw.experiment.name()));
            Vec::new()
        }
        (None, false) => Vec::new(),
    };

    if sweep.quantity.is_some() && raw.experiment != Experiment::CoefficientSweep {
        errs.push("sweep.quantity", "only used by coefficient_sweep");
    }
    let q_width = sweep.q_width.unwrap_or(5);
    if q_width < 0 {
        errs.push("sweep.q_width", "must be non-negative");
    }
    let blocks = sweep.blocks.unwrap_or(12);
    let block_len = sweep.block_len.unwrap_or(16);
    if needs.distances {
        if blocks < 2 {
            errs.push("sweep.blocks", "need at least two blocks for a fit");
        }
        if block_len < 4 {
            errs.push("sweep.block_len", "need at least four distances per block");
        }
    }

    if !errs.0.is_empty() {
        return Err(ValidationError { problems: errs.0 });
    }
    let config_hash = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok(Plan {
        experiment: raw.experiment,
        scatterer: left.expect("validated"),
        right,
        windows,
        lengths,
        orders,
        alphas,
        distances,
        quantity,
        q_width,
        blocks,
        block_len,
        output: OutputSpec { path: base.join(&raw.output.path), format: raw.output.format },
        config_hash,
    })
}

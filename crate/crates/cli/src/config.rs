//! Scenario configuration: JSON file, command-line overrides and validation.

use std::path::PathBuf;

use qest_core::bounds::WeightMatrix;
use qest_core::scalar::RMatrix;
use qest_core::zoo::{self, ZooEntry};
use qest_core::Tolerances;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Bounds,
    Classify,
    Simulate,
    Imaging,
    Multiphase,
}

/// Either a single parameter vector or a sweep of one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Point(Vec<f64>),
    Sweep(SweepSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Parameter name (`separation`, `centroid`, `w`, `gapK`, `mean`) or index.
    pub param: ParamRef,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    #[serde(default)]
    pub log: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    /// `random:K` (seeded rank-one POVM with K outcomes) or `computational`.
    #[serde(default = "default_povm")]
    pub povm: String,
    #[serde(default = "default_boot")]
    pub bootstrap: usize,
}

fn default_shots() -> u64 {
    10_000
}
fn default_reps() -> usize {
    400
}
fn default_povm() -> String {
    "random:9".into()
}
fn default_boot() -> usize {
    1000
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self { shots: default_shots(), repetitions: default_reps(), povm: default_povm(), bootstrap: default_boot() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiphaseSpec {
    #[serde(default = "default_d")]
    pub d: Vec<usize>,
    #[serde(default = "default_photons")]
    pub photons: Vec<usize>,
}

fn default_d() -> Vec<usize> {
    vec![1, 2, 3, 5]
}
fn default_photons() -> Vec<usize> {
    vec![1, 2, 4]
}

impl Default for MultiphaseSpec {
    fn default() -> Self {
        Self { d: default_d(), photons: default_photons() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub lambda: Option<LambdaSpec>,
    /// Extra sample points for `classify`.
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub weight: Option<WeightSpec>,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: std::collections::BTreeMap<String, serde_json::Value>,
    #[serde(default = "yes")]
    pub holevo: bool,
    #[serde(default)]
    pub simulate: SimulateSpec,
    #[serde(default)]
    pub multiphase: MultiphaseSpec,
}

fn yes() -> bool {
    true
}

impl ScenarioConfig {
    pub fn empty(task: Task) -> Self {
        Self {
            model: None,
            lambda: None,
            points: Vec::new(),
            weight: None,
            tasks: vec![task],
            output: None,
            seed: 0,
            tolerances: Default::default(),
            holevo: true,
            simulate: SimulateSpec::default(),
            multiphase: MultiphaseSpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn tolerances(&self) -> Result<Tolerances, CliError> {
        let mut t = Tolerances::default();
        for (k, v) in &self.tolerances {
            let text = match v {
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::String(s) => s.clone(),
                _ => return Err(CliError::Validation(format!("tolerances.{k}: expected a number"))),
            };
            t.set(k, &text).map_err(|e| CliError::Validation(format!("tolerances.{k}: {e}")))?;
        }
        Ok(t)
    }

    /// Structural checks that do not need any numerics.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.tasks.is_empty() {
            return Err(CliError::Validation("tasks: at least one task is required".into()));
        }
        self.tolerances()?;
        let needs_model = self.tasks.iter().any(|t| matches!(t, Task::Bounds | Task::Classify | Task::Simulate | Task::Imaging));
        if needs_model {
            self.entry()?;
        }
        if let Some(LambdaSpec::Sweep(s)) = &self.lambda {
            if s.steps < 1 {
                return Err(CliError::Validation("lambda.steps: must be at least 1".into()));
            }
            if s.log && !(s.from > 0.0 && s.to > 0.0) {
                return Err(CliError::Validation("lambda: logarithmic sweep needs positive endpoints".into()));
            }
            if !(s.from.is_finite() && s.to.is_finite()) {
                return Err(CliError::Validation("lambda: sweep endpoints must be finite".into()));
            }
        }
        if self.tasks.contains(&Task::Simulate) {
            if matches!(self.lambda, Some(LambdaSpec::Sweep(_))) {
                return Err(CliError::Validation("lambda: simulate runs at a single point, not a sweep".into()));
            }
            if self.simulate.shots == 0 || self.simulate.repetitions < 2 {
                return Err(CliError::Validation("simulate: need shots ≥ 1 and repetitions ≥ 2".into()));
            }
            parse_povm(&self.simulate.povm)?;
        }
        if self.multiphase.d.iter().chain(&self.multiphase.photons).any(|v| *v == 0) {
            return Err(CliError::Validation("multiphase: d and photons must be positive".into()));
        }
        Ok(())
    }

    pub fn model_id(&self) -> Result<&str, CliError> {
        self.model.as_deref().ok_or_else(|| CliError::Validation("model: a model id is required".into()))
    }

    pub fn entry(&self) -> Result<ZooEntry, CliError> {
        let id = self.model_id()?;
        zoo::lookup(id).map_err(|e| match e {
            qest_core::QestError::InvalidInput(m) => CliError::Validation(format!("model: {m}")),
            other => CliError::Validation(format!("model: {other}")),
        })
    }

    /// Parameter vectors to evaluate, in sweep order.
    pub fn points(&self, entry: &ZooEntry) -> Result<Vec<Vec<f64>>, CliError> {
        let dim = entry.model.param_dim();
        let base = entry.default_lambda.clone();
        match &self.lambda {
            None => Ok(vec![base]),
            Some(LambdaSpec::Point(p)) => {
                if p.len() != dim {
                    return Err(CliError::Validation(format!("lambda: expected {dim} components, got {}", p.len())));
                }
                Ok(vec![p.clone()])
            }
            Some(LambdaSpec::Sweep(s)) => {
                let targets = sweep_targets(self.model_id()?, dim, &s.param)?;
                Ok(sweep_values(s)
                    .into_iter()
                    .map(|v| {
                        let mut l = base.clone();
                        for &i in &targets {
                            l[i] = v;
                        }
                        l
                    })
                    .collect())
            }
        }
    }

    pub fn weight(&self, dim: usize) -> Result<WeightMatrix<f64>, CliError> {
        match &self.weight {
            None => Ok(WeightMatrix::identity(dim)),
            Some(WeightSpec::Named(s)) if s == "identity" => Ok(WeightMatrix::identity(dim)),
            Some(WeightSpec::Named(s)) => Err(CliError::Validation(format!("weight: unknown weight `{s}`"))),
            Some(WeightSpec::Matrix(rows)) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(CliError::Validation(format!("weight: expected a {dim}×{dim} matrix")));
                }
                let m = RMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
                WeightMatrix::new(m).map_err(|e| CliError::Validation(format!("weight: {e}")))
            }
        }
    }
}

pub fn sweep_values(s: &SweepSpec) -> Vec<f64> {
    if s.steps == 1 {
        return vec![s.from];
    }
    let last = (s.steps - 1) as f64;
    (0..s.steps)
        .map(|i| {
            let t = i as f64 / last;
            if s.log {
                (s.from.ln() + t * (s.to.ln() - s.from.ln())).exp()
            } else {
                s.from + t * (s.to - s.from)
            }
        })
        .collect()
}

/// `NAME:from:to:steps[:log]`.
pub fn parse_sweep(text: &str) -> Result<SweepSpec, CliError> {
    let bad = || CliError::Validation(format!("--sweep: expected NAME:FROM:TO:STEPS[:log], got `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    if !(4..=5).contains(&parts.len()) {
        return Err(bad());
    }
    let log = match parts.get(4) {
        None => false,
        Some(&"log") => true,
        Some(&"lin") => false,
        Some(_) => return Err(bad()),
    };
    let param = match parts[0].parse::<usize>() {
        Ok(i) => ParamRef::Index(i),
        Err(_) => ParamRef::Name(parts[0].to_string()),
    };
    Ok(SweepSpec {
        param,
        from: parts[1].parse().map_err(|_| bad())?,
        to: parts[2].parse().map_err(|_| bad())?,
        steps: parts[3].parse().map_err(|_| bad())?,
        log,
    })
}

/// Names of the parameters of a zoo model, in order.
pub fn param_names(model_id: &str, dim: usize) -> Vec<String> {
    let head = model_id.split(':').next().unwrap_or("").trim();
    match head {
        "two-source" => vec!["centroid".into(), "separation".into()],
        "two-source-imbalance" => vec!["centroid".into(), "separation".into(), "w".into()],
        "n-source" => {
            let mut v = vec!["mean".to_string()];
            v.extend((1..dim).map(|k| format!("gap{k}")));
            v
        }
        "multiphase" => (1..=dim).map(|k| format!("phi{k}")).collect(),
        "qubit-tomography" => vec!["rx".into(), "ry".into(), "rz".into()],
        _ => (0..dim).map(|k| format!("lambda{k}")).collect(),
    }
}

/// Coordinates set by a sweep. For equally spaced scenes `separation` moves
/// every gap together.
fn sweep_targets(model_id: &str, dim: usize, p: &ParamRef) -> Result<Vec<usize>, CliError> {
    let names = param_names(model_id, dim);
    let found = match p {
        ParamRef::Index(i) if *i < dim => vec![*i],
        ParamRef::Index(_) => vec![],
        ParamRef::Name(n) if n == "separation" && names.first().map(String::as_str) == Some("mean") => (1..dim).collect(),
        ParamRef::Name(n) => names.iter().position(|x| x == n).into_iter().collect(),
    };
    if found.is_empty() {
        return Err(CliError::Validation(format!("lambda.param: no parameter {p:?} in `{model_id}` (known: {})", names.join(", "))));
    }
    Ok(found)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PovmSpec {
    Random(usize),
    Computational,
}

pub fn parse_povm(text: &str) -> Result<PovmSpec, CliError> {
    if text == "computational" {
        return Ok(PovmSpec::Computational);
    }
    if let Some(k) = text.strip_prefix("random:") {
        if let Ok(k) = k.parse::<usize>() {
            if k >= 1 {
                return Ok(PovmSpec::Random(k));
            }
        }
    }
    Err(CliError::Validation(format!("simulate.povm: expected `computational` or `random:K`, got `{text}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing_and_values() {
        let s = parse_sweep("separation:0.01:3:60:log").unwrap();
        let v = sweep_values(&s);
        assert_eq!(v.len(), 60);
        assert!((v[0] - 0.01).abs() < 1e-15 && (v[59] - 3.0).abs() < 1e-12);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        assert!(parse_sweep("x:1:2").is_err());
        assert_eq!(sweep_values(&parse_sweep("0:1:2:1").unwrap()), vec![1.0]);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(ScenarioConfig::from_json(r#"{"tasks":["bounds"],"modle":"x"}"#).is_err());
        let c = ScenarioConfig::from_json(r#"{"tasks":["bounds"],"model":"phase-qubit"}"#).unwrap();
        c.validate().unwrap();
    }
}

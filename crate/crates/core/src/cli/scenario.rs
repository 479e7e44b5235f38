//! TOML scenario files.
//!
//! ```toml
//! spec_version = 1
//! seed = 7
//! n_trials = 1000
//!
//! [[agents]]
//! id = "ana"
//! experience = 8.0
//!
//! [[nodes]]
//! id = "review"
//! agent = "ana"
//! info = { magnitude = 4.0, support = "discrete", spread = 0.5 }
//! regime = { kind = "C", base_precision = 0.5 }
//! ```
//!
//! Regime-specific keys (`table`, `success`, `density`, `threshold`,
//! `ceiling`, `cdf`, `rate`, `samples`) are only accepted on the regimes that
//! use them.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cli::CliError;
use crate::model::{DensityKind, DensitySpec, ExternalSource, Experience, InfoSource, RegimeKind, Support, TimeModel};
use crate::regimes::{JointTable, RegimeShape, RegimeSpec};
use crate::simulator::{
    validate_graph, Agent, Assignment, MonteCarloOptions, WorkNode, WorkflowGraph, DEFAULT_JOINT_SAMPLES,
};

pub const SCENARIO_VERSION: u32 = 1;
pub const DEFAULT_TRIALS: u64 = 1000;
pub const DEFAULT_GAIN: f64 = 0.1;

fn default_trials() -> u64 {
    DEFAULT_TRIALS
}

fn default_true() -> bool {
    true
}

fn default_gain() -> f64 {
    DEFAULT_GAIN
}

fn default_target() -> f64 {
    0.5
}

fn default_dimension() -> u32 {
    1
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn is_one(x: &u32) -> bool {
    *x == 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub spec_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub n_trials: u64,
    #[serde(default = "default_true")]
    pub reset_experience: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub agents: Vec<AgentConfig>,
    pub nodes: Vec<NodeConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<EdgeConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub id: String,
    pub experience: f64,
    #[serde(default = "default_gain")]
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub id: String,
    pub agent: String,
    #[serde(default = "default_target")]
    pub precision_target: f64,
    pub info: InfoConfig,
    pub regime: RegimeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external: Option<ExternalConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoConfig {
    pub magnitude: f64,
    pub support: Support,
    #[serde(default = "default_dimension", skip_serializing_if = "is_one")]
    pub dimension: u32,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeKind {
    Fixed,
    GeometricRetries,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    pub kind: TimeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolve_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            kind: TimeKind::Fixed,
            base_time: Some(1.0),
            resolve_prob: None,
            rate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub index: Vec<u32>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    pub kind: DensityKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeConfig {
    pub kind: RegimeKind,
    pub base_precision: f64,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ceiling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdf: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<TableEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalConfig {
    pub bounds: Vec<[f64; 2]>,
    pub densities: Vec<DensityConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeConfig {
    pub from: String,
    pub to: String,
}

/// Everything needed to run a scenario.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub graph: WorkflowGraph,
    pub assignment: Assignment,
    pub options: MonteCarloOptions,
}

/// Parses TOML text. Unknown keys are errors unless `lenient`, in which case
/// they are returned as warnings.
pub fn parse_scenario_str(text: &str, lenient: bool) -> Result<(Scenario, Vec<String>), CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Input(format!("scenario syntax: {e}")))?;
    let mut unknown = Vec::new();
    let mut record = |path: serde_ignored::Path<'_>| unknown.push(key_path(&path));
    let ignoring = serde_ignored::Deserializer::new(de, &mut record);
    let scenario: Scenario = serde_path_to_error::deserialize(ignoring).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Input(format!("{path}: {}", inner.message().trim_end()))
    })?;
    let mut warnings = Vec::new();
    for path in unknown {
        let msg = format!("{path}: unknown key");
        if lenient {
            warnings.push(msg);
        } else {
            return Err(CliError::Input(msg));
        }
    }
    for msg in scenario.inapplicable_keys() {
        if lenient {
            warnings.push(msg);
        } else {
            return Err(CliError::Input(msg));
        }
    }
    scenario.build()?;
    Ok((scenario, warnings))
}

/// `nodes[2].regime.colour` style rendering.
fn key_path(path: &serde_ignored::Path<'_>) -> String {
    use serde_ignored::Path;
    match path {
        Path::Root => String::new(),
        Path::Seq { parent, index } => format!("{}[{index}]", key_path(parent)),
        Path::Map { parent, key } => match key_path(parent) {
            p if p.is_empty() => key.clone(),
            p => format!("{p}.{key}"),
        },
        Path::Some { parent } | Path::NewtypeStruct { parent } | Path::NewtypeVariant { parent } => key_path(parent),
    }
}

pub fn parse_scenario(path: &Path, lenient: bool) -> Result<(Scenario, Vec<String>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read scenario {}: {e}", path.display())))?;
    parse_scenario_str(&text, lenient)
}

pub fn emit_scenario(s: &Scenario) -> Result<String, CliError> {
    toml::to_string(s).map_err(|e| CliError::Input(format!("cannot serialize scenario: {e}")))
}

fn range_error(path: &str, value: f64, range: &str) -> CliError {
    CliError::Input(format!("{path}: {value} out of {range}"))
}

fn at<T>(path: &str, r: crate::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Input(format!("{path}: {e}")))
}

fn check_id(path: &str, id: &str) -> Result<(), CliError> {
    let ok = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(CliError::Input(format!(
            "{path}: `{id}` must be nonempty ASCII letters, digits, `_`, `-` or `.`"
        )))
    }
}

impl DensityConfig {
    fn build(&self, path: &str) -> Result<DensitySpec, CliError> {
        let table = self.table.as_ref().map(|t| t.iter().map(|p| (p[0], p[1])).collect());
        at(path, DensitySpec::new(self.kind, self.params.clone(), table))
    }
}

impl TimeConfig {
    fn build(&self, path: &str) -> Result<TimeModel, CliError> {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| CliError::Input(format!("{path}.{key}: required for {:?} time", self.kind)))
        };
        let refuse = |v: Option<f64>, key: &str| match v {
            Some(_) => Err(CliError::Input(format!("{path}.{key}: not used by {:?} time", self.kind))),
            None => Ok(()),
        };
        let model = match self.kind {
            TimeKind::Fixed => {
                refuse(self.resolve_prob, "resolve_prob")?;
                refuse(self.rate, "rate")?;
                TimeModel::Fixed {
                    base_time: need(self.base_time, "base_time")?,
                }
            }
            TimeKind::GeometricRetries => {
                refuse(self.rate, "rate")?;
                TimeModel::GeometricRetries {
                    base_time: need(self.base_time, "base_time")?,
                    resolve_prob: need(self.resolve_prob, "resolve_prob")?,
                }
            }
            TimeKind::Exponential => {
                refuse(self.base_time, "base_time")?;
                refuse(self.resolve_prob, "resolve_prob")?;
                TimeModel::Exponential {
                    rate: need(self.rate, "rate")?,
                }
            }
        };
        at(path, model.validate())?;
        Ok(model)
    }
}

impl RegimeConfig {
    /// Regime-specific keys present on this regime, with the regimes that
    /// accept each.
    fn present_keys(&self) -> Vec<(&'static str, &'static [RegimeKind])> {
        use RegimeKind::*;
        let mut keys: Vec<(&'static str, &'static [RegimeKind])> = Vec::new();
        if self.table.is_some() {
            keys.push(("table", &[Deterministic]));
        }
        if self.success.is_some() {
            keys.push(("success", &[Deterministic]));
        }
        if self.density.is_some() {
            keys.push(("density", &[ContinuousDecreasing]));
        }
        if self.threshold.is_some() {
            keys.push(("threshold", &[ContinuousDecreasing]));
        }
        if self.ceiling.is_some() {
            keys.push(("ceiling", &[ContinuousDecreasing]));
        }
        if self.cdf.is_some() {
            keys.push(("cdf", &[ContinuousIncreasing]));
        }
        if self.rate.is_some() {
            keys.push(("rate", &[ContinuousIncreasing]));
        }
        if self.samples.is_some() {
            keys.push(("samples", &[JointExternal]));
        }
        keys
    }

    fn build(&self, path: &str) -> Result<RegimeSpec, CliError> {
        if !(0.0..=1.0).contains(&self.base_precision) {
            return Err(range_error(&format!("{path}.base_precision"), self.base_precision, "[0,1]"));
        }
        let time = self.time.build(&format!("{path}.time"))?;
        let need = |key: &str| CliError::Input(format!("{path}.{key}: required for regime {}", self.kind));
        let shape = match self.kind {
            RegimeKind::Bernoulli => RegimeShape::Bernoulli,
            RegimeKind::Deterministic => {
                let table = match &self.table {
                    Some(t) => at(
                        &format!("{path}.table"),
                        JointTable::new(t.iter().map(|e| (e.index.clone(), e.p)).collect()),
                    )?,
                    None => JointTable::point_mass(vec![0]),
                };
                let success = match &self.success {
                    Some(s) => s.clone(),
                    None if table.outcomes().len() == 1 => table.outcomes()[0].0.clone(),
                    None => return Err(need("success")),
                };
                RegimeShape::Deterministic { table, success }
            }
            RegimeKind::DiscreteDecreasing => RegimeShape::DiscreteDecreasing,
            RegimeKind::DiscreteIncreasing => RegimeShape::DiscreteIncreasing,
            RegimeKind::ContinuousDecreasing => RegimeShape::ContinuousDecreasing {
                density: self.density.as_ref().ok_or_else(|| need("density"))?.build(&format!("{path}.density"))?,
                threshold: self.threshold.ok_or_else(|| need("threshold"))?,
                ceiling: self.ceiling.unwrap_or(f64::INFINITY),
            },
            RegimeKind::ContinuousIncreasing => RegimeShape::ContinuousIncreasing {
                cdf: self
                    .cdf
                    .as_ref()
                    .ok_or_else(|| need("cdf"))?
                    .iter()
                    .map(|p| (p[0], p[1]))
                    .collect(),
                rate: self.rate.ok_or_else(|| need("rate"))?,
            },
            RegimeKind::JointExternal => RegimeShape::JointExternal {
                samples: self.samples.unwrap_or(DEFAULT_JOINT_SAMPLES),
            },
        };
        at(path, RegimeSpec::new(shape, self.base_precision, time))
    }
}

impl Scenario {
    /// Keys present on a regime that does not use them.
    pub fn inapplicable_keys(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (k, n) in self.nodes.iter().enumerate() {
            for (key, accepted) in n.regime.present_keys() {
                if !accepted.contains(&n.regime.kind) {
                    out.push(format!("nodes[{k}].regime.{key}: not used by regime {}", n.regime.kind));
                }
            }
        }
        out
    }

    /// Validates everything and assembles the runnable pieces.
    pub fn build(&self) -> Result<BuiltScenario, CliError> {
        if self.spec_version != SCENARIO_VERSION {
            return Err(CliError::Input(format!(
                "spec_version: {} is not supported (expected {SCENARIO_VERSION})",
                self.spec_version
            )));
        }
        if self.n_trials == 0 {
            return Err(CliError::Input("n_trials: 0 out of [1, inf)".into()));
        }
        if let Some(a) = self.arrival_rate {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(range_error("arrival_rate", a, "[0, inf)"));
            }
        }
        if self.agents.is_empty() {
            return Err(CliError::Input("agents: at least one agent is required".into()));
        }
        let mut agents = Vec::with_capacity(self.agents.len());
        let mut agent_ids = BTreeSet::new();
        for (k, a) in self.agents.iter().enumerate() {
            let path = format!("agents[{k}]");
            check_id(&format!("{path}.id"), &a.id)?;
            if !agent_ids.insert(a.id.as_str()) {
                return Err(CliError::Input(format!("{path}.id: duplicate agent `{}`", a.id)));
            }
            if !(a.experience >= 0.0 && a.experience.is_finite()) {
                return Err(range_error(&format!("{path}.experience"), a.experience, "[0, inf)"));
            }
            if !(a.gain > 0.0 && a.gain.is_finite()) {
                return Err(range_error(&format!("{path}.gain"), a.gain, "(0, inf)"));
            }
            let exp = at(&format!("{path}.experience"), Experience::new(a.experience))?;
            agents.push(at(&path, Agent::new(a.id.clone(), exp, a.gain))?);
        }

        if self.nodes.is_empty() {
            return Err(CliError::Input("nodes: at least one node is required".into()));
        }
        let mut nodes = Vec::with_capacity(self.nodes.len());
        let mut node_ids = BTreeSet::new();
        let mut pairs = Vec::with_capacity(self.nodes.len());
        for (k, n) in self.nodes.iter().enumerate() {
            let path = format!("nodes[{k}]");
            check_id(&format!("{path}.id"), &n.id)?;
            if !node_ids.insert(n.id.as_str()) {
                return Err(CliError::Input(format!("{path}.id: duplicate node `{}`", n.id)));
            }
            if !agent_ids.contains(n.agent.as_str()) {
                return Err(CliError::Input(format!("{path}.agent: unknown agent `{}`", n.agent)));
            }
            if !(0.0..=1.0).contains(&n.precision_target) {
                return Err(range_error(&format!("{path}.precision_target"), n.precision_target, "[0,1]"));
            }
            let i = &n.info;
            if !(i.magnitude >= 0.0 && i.magnitude.is_finite()) {
                return Err(range_error(&format!("{path}.info.magnitude"), i.magnitude, "[0, inf)"));
            }
            if !(0.0..1.0).contains(&i.spread) {
                return Err(range_error(&format!("{path}.info.spread"), i.spread, "[0, 1)"));
            }
            let info = at(
                &format!("{path}.info"),
                InfoSource::with_shape(i.magnitude, i.support, i.dimension, i.spread),
            )?;
            let regime = n.regime.build(&format!("{path}.regime"))?;
            let external = match &n.external {
                None => None,
                Some(x) => {
                    let densities = x
                        .densities
                        .iter()
                        .enumerate()
                        .map(|(d, c)| c.build(&format!("{path}.external.densities[{d}]")))
                        .collect::<Result<Vec<_>, _>>()?;
                    let bounds = x.bounds.iter().map(|b| (b[0], b[1])).collect();
                    Some(at(&format!("{path}.external"), ExternalSource::new(densities, bounds))?)
                }
            };
            pairs.push((n.id.clone(), n.agent.clone()));
            nodes.push(WorkNode {
                id: n.id.clone(),
                info,
                regime,
                external,
                precision_target: n.precision_target,
            });
        }
        for (k, e) in self.edges.iter().enumerate() {
            for (key, id) in [("from", &e.from), ("to", &e.to)] {
                if !node_ids.contains(id.as_str()) {
                    return Err(CliError::Input(format!("edges[{k}].{key}: unknown node `{id}`")));
                }
            }
        }
        let graph = WorkflowGraph {
            nodes,
            edges: self.edges.iter().map(|e| (e.from.clone(), e.to.clone())).collect(),
        };
        let report = validate_graph(&graph);
        if !report.is_valid() {
            let issues: Vec<String> = report.issues.iter().map(|i| i.to_string()).collect();
            return Err(CliError::Input(format!("workflow: {}", issues.join("; "))));
        }
        let assignment = Assignment::new(&graph, agents, &pairs).map_err(|e| CliError::Input(format!("nodes: {e}")))?;
        let mut options = MonteCarloOptions::new(self.n_trials, self.seed);
        options.reset_experience = self.reset_experience;
        options.arrival_rate = self.arrival_rate;
        Ok(BuiltScenario {
            graph,
            assignment,
            options,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
spec_version = 1

[[agents]]
id = "a"
experience = 2.0

[[nodes]]
id = "n"
agent = "a"
info = { magnitude = 1.0, support = "discrete" }
regime = { kind = "A", base_precision = 0.3 }
"#;

    fn err(text: &str) -> String {
        match parse_scenario_str(text, false) {
            Err(CliError::Input(m)) => m,
            other => panic!("expected input error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_gets_defaults() {
        let (s, warnings) = parse_scenario_str(MINIMAL, false).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(s.n_trials, 1000);
        assert!(s.reset_experience);
        assert_eq!(s.seed, 0);
        assert_eq!(s.nodes[0].regime.time, TimeConfig::default());
        let built = s.build().unwrap();
        assert_eq!(built.options.n_trials, 1000);
    }

    #[test]
    fn base_precision_range_names_key() {
        let text = MINIMAL.replace("base_precision = 0.3", "base_precision = 1.3");
        assert_eq!(err(&text), "nodes[0].regime.base_precision: 1.3 out of [0,1]");
    }

    #[test]
    fn dangling_edge_names_key() {
        let text = format!("{MINIMAL}\n[[edges]]\nfrom = \"n\"\nto = \"ghost\"\n");
        assert_eq!(err(&text), "edges[0].to: unknown node `ghost`");
    }

    #[test]
    fn unknown_keys_strict_and_lenient() {
        let text = MINIMAL.replace("id = \"a\"", "id = \"a\"\ncolour = 3");
        assert!(err(&text).contains("agents[0].colour"));
        let (_, warnings) = parse_scenario_str(&text, true).unwrap();
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn inapplicable_regime_key_rejected() {
        let text = MINIMAL.replace("base_precision = 0.3", "base_precision = 0.3, threshold = 1.0");
        assert_eq!(err(&text), "nodes[0].regime.threshold: not used by regime A_Bernoulli");
    }

    #[test]
    fn type_errors_carry_path() {
        let text = MINIMAL.replace("experience = 2.0", "experience = \"lots\"");
        assert!(err(&text).starts_with("agents[0].experience"), "{}", err(&text));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = err("spec_version = = 1");
        assert!(e.contains("line 1"), "{e}");
    }

    #[test]
    fn emit_round_trips() {
        let (s, _) = parse_scenario_str(MINIMAL, false).unwrap();
        let text = emit_scenario(&s).unwrap();
        let (back, _) = parse_scenario_str(&text, false).unwrap();
        assert_eq!(back, s);
    }
}

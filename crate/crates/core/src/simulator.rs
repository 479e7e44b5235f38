//! Discrete-event Monte Carlo engine over a workflow DAG.
//!
//! A trial pushes one workflow instance through the graph in topological
//! order. Each node builds its regime distribution from the assigned agent's
//! current experience, draws a precision outcome and a service time, then
//! feeds the outcome back into the agent's experience. A node starts once
//! every predecessor has finished.
//!
//! Trials are seeded from a counter mix of the master seed, so an i.i.d.
//! ensemble is bit-identical however many workers execute it. Learning mode
//! carries experience from one trial to the next and always runs in order.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::ObservationSet;
use crate::error::{check_positive, check_probability, Error, Result};
use crate::learning::update_experience;
use crate::metrics::{binary_entropy, flow_regularity, saturation_flag, Histogram};
use crate::model::{EventOutcome, Experience, ExternalSource, InfoSource, RegimeKind, Support, TimeModel};
use crate::regimes::{build_distribution, sample_external, RegimeContext, RegimeShape, RegimeSpec, SupportDescription};

/// Number of lattice steps used for discrete realizations (11 levels).
pub const LATTICE_STEPS: u32 = 10;

/// Monte Carlo sample count for joint-external masses when a scenario does
/// not say otherwise.
pub const DEFAULT_JOINT_SAMPLES: usize = 10_000;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of stream `k` under `master`: the `(k + 1)`-th SplitMix64 output of
/// a generator started at `master`.
pub fn derive_seed(master: u64, k: u64) -> u64 {
    mix64(master.wrapping_add(k.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// A step of the workflow.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkNode {
    pub id: String,
    pub info: InfoSource,
    pub regime: RegimeSpec,
    pub external: Option<ExternalSource>,
    pub precision_target: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorkflowGraph {
    pub nodes: Vec<WorkNode>,
    pub edges: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum GraphIssue {
    Empty,
    DuplicateNode { id: String },
    DanglingEdge { from: String, to: String },
    Cycle { nodes: Vec<String> },
    NoSource,
    ExternalMismatch { node: String, regime: RegimeKind },
    TargetOutOfRange { node: String },
}

impl std::fmt::Display for GraphIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphIssue::Empty => write!(f, "workflow has no nodes"),
            GraphIssue::DuplicateNode { id } => write!(f, "node id `{id}` is declared twice"),
            GraphIssue::DanglingEdge { from, to } => write!(f, "edge {from} -> {to} references an unknown node"),
            GraphIssue::Cycle { nodes } => write!(f, "cycle through {}", nodes.join(", ")),
            GraphIssue::NoSource => write!(f, "workflow has no source node"),
            GraphIssue::ExternalMismatch { node, regime } => {
                if *regime == RegimeKind::JointExternal {
                    write!(f, "node `{node}` uses {regime} but has no external source")
                } else {
                    write!(f, "node `{node}` has an external source but uses {regime}")
                }
            }
            GraphIssue::TargetOutOfRange { node } => write!(f, "node `{node}` precision target outside [0, 1]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<GraphIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Reports structural problems; a valid graph has none.
pub fn validate_graph(g: &WorkflowGraph) -> ValidationReport {
    let mut issues = Vec::new();
    if g.nodes.is_empty() {
        issues.push(GraphIssue::Empty);
        return ValidationReport { issues };
    }
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (k, n) in g.nodes.iter().enumerate() {
        if index.insert(n.id.as_str(), k).is_some() {
            issues.push(GraphIssue::DuplicateNode { id: n.id.clone() });
        }
        let wants_external = n.regime.kind() == RegimeKind::JointExternal;
        if wants_external != n.external.is_some() {
            issues.push(GraphIssue::ExternalMismatch {
                node: n.id.clone(),
                regime: n.regime.kind(),
            });
        }
        if !(0.0..=1.0).contains(&n.precision_target) {
            issues.push(GraphIssue::TargetOutOfRange { node: n.id.clone() });
        }
    }
    let mut succ = vec![Vec::new(); g.nodes.len()];
    let mut indeg = vec![0usize; g.nodes.len()];
    for (from, to) in &g.edges {
        match (index.get(from.as_str()), index.get(to.as_str())) {
            (Some(&a), Some(&b)) => {
                succ[a].push(b);
                indeg[b] += 1;
            }
            _ => issues.push(GraphIssue::DanglingEdge {
                from: from.clone(),
                to: to.clone(),
            }),
        }
    }
    if indeg.iter().all(|&d| d > 0) {
        issues.push(GraphIssue::NoSource);
    }
    let order = kahn(&succ, indeg);
    if order.len() < g.nodes.len() {
        let mut seen = vec![false; g.nodes.len()];
        for &k in &order {
            seen[k] = true;
        }
        let nodes = g
            .nodes
            .iter()
            .enumerate()
            .filter(|(k, _)| !seen[*k])
            .map(|(_, n)| n.id.clone())
            .collect();
        issues.push(GraphIssue::Cycle { nodes });
    }
    ValidationReport { issues }
}

/// Topological order, lowest declaration index first among ready nodes.
fn kahn(succ: &[Vec<usize>], mut indeg: Vec<usize>) -> Vec<usize> {
    let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
        (0..succ.len()).filter(|&k| indeg[k] == 0).map(std::cmp::Reverse).collect();
    let mut order = Vec::with_capacity(succ.len());
    while let Some(std::cmp::Reverse(k)) = ready.pop() {
        order.push(k);
        for &s in &succ[k] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(std::cmp::Reverse(s));
            }
        }
    }
    order
}

/// An individual processing work items, carrying its own experience.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: String,
    pub experience: Experience,
    pub gain: f64,
}

impl Agent {
    /// Zero experience is seeded at the floor so ratios are defined from the
    /// first trial on.
    pub fn new(id: impl Into<String>, experience: Experience, gain: f64) -> Result<Self> {
        check_positive("gain", gain)?;
        Ok(Self {
            id: id.into(),
            experience: experience.floored(),
            gain,
        })
    }
}

/// Agents together with the static node-to-agent assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    agents: Vec<Agent>,
    /// Agent index per node, in graph declaration order.
    by_node: Vec<usize>,
}

impl Assignment {
    /// `pairs` maps node ids to agent ids; every node must be covered.
    pub fn new(g: &WorkflowGraph, agents: Vec<Agent>, pairs: &[(String, String)]) -> Result<Self> {
        let agent_index: HashMap<&str, usize> = agents.iter().enumerate().map(|(k, a)| (a.id.as_str(), k)).collect();
        let mut by_node = vec![None; g.nodes.len()];
        for (node, agent) in pairs {
            let n = g
                .nodes
                .iter()
                .position(|w| &w.id == node)
                .ok_or_else(|| Error::UnknownNode(node.clone()))?;
            let a = *agent_index
                .get(agent.as_str())
                .ok_or_else(|| Error::InvalidGraph(format!("unknown agent `{agent}` assigned to `{node}`")))?;
            if by_node[n].replace(a).is_some() {
                return Err(Error::InvalidGraph(format!("node `{node}` is assigned twice")));
            }
        }
        let by_node = by_node
            .into_iter()
            .zip(&g.nodes)
            .map(|(a, n)| a.ok_or_else(|| Error::InvalidGraph(format!("node `{}` has no agent", n.id))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { agents, by_node })
    }

    /// One agent per node, in node order.
    pub fn one_per_node(g: &WorkflowGraph, agents: Vec<Agent>) -> Result<Self> {
        if agents.len() != g.nodes.len() {
            return Err(Error::InvalidGraph(format!(
                "{} agents for {} nodes",
                agents.len(),
                g.nodes.len()
            )));
        }
        let by_node = (0..agents.len()).collect();
        Ok(Self { agents, by_node })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent_for(&self, node_index: usize) -> &Agent {
        &self.agents[self.by_node[node_index]]
    }
}

/// Everything recorded about one node in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTrace {
    pub outcome: EventOutcome,
    pub precision_prob: f64,
    /// Information magnitude realized for this instance.
    pub info: f64,
    /// Agent experience before the update.
    pub experience: f64,
    pub start: f64,
    pub finish: f64,
    /// Synchronization wait at a join plus service time.
    pub dwell: f64,
    /// Realized external-source draw (joint-external nodes only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub external: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    /// Per node, in graph declaration order.
    pub nodes: Vec<NodeTrace>,
    /// Completion time of the critical path.
    pub total_time: f64,
    /// 1 when every node hit its precision target, else 0.
    pub end_to_end_precision: f64,
}

/// A validated graph with its topological order and per-run constants.
#[derive(Debug, Clone)]
pub struct PreparedWorkflow<'g> {
    graph: &'g WorkflowGraph,
    order: Vec<usize>,
    preds: Vec<Vec<usize>>,
    /// Cached joint-external masses, per node.
    joint_masses: Vec<Option<f64>>,
}

impl<'g> PreparedWorkflow<'g> {
    /// Validates the graph and evaluates experience-independent regimes once.
    pub fn new(graph: &'g WorkflowGraph, seed: u64) -> Result<Self> {
        let report = validate_graph(graph);
        if let Some(first) = report.issues.first() {
            return Err(Error::InvalidGraph(first.to_string()));
        }
        let index: HashMap<&str, usize> = graph.nodes.iter().enumerate().map(|(k, n)| (n.id.as_str(), k)).collect();
        let mut succ = vec![Vec::new(); graph.nodes.len()];
        let mut preds = vec![Vec::new(); graph.nodes.len()];
        let mut indeg = vec![0usize; graph.nodes.len()];
        for (from, to) in &graph.edges {
            let (a, b) = (index[from.as_str()], index[to.as_str()]);
            succ[a].push(b);
            preds[b].push(a);
            indeg[b] += 1;
        }
        let order = kahn(&succ, indeg);
        let mut joint_masses = vec![None; graph.nodes.len()];
        for (k, node) in graph.nodes.iter().enumerate() {
            if let Some(src) = &node.external {
                let ctx = RegimeContext {
                    external: Some(src),
                    seed: derive_seed(seed, u64::MAX - k as u64),
                };
                let floor = Experience::new(0.0)?.floored();
                let m = build_distribution(&node.regime, &floor, &node.info, ctx).map_err(|e| Error::NodeAbort {
                    node: node.id.clone(),
                    source: Box::new(e),
                })?;
                joint_masses[k] = Some(m.precision_prob());
            }
        }
        Ok(Self {
            graph,
            order,
            preds,
            joint_masses,
        })
    }

    pub fn graph(&self) -> &WorkflowGraph {
        self.graph
    }

    /// Runs one instance; agents are updated in place.
    pub fn run_trial(&self, agents: &mut Assignment, trial_index: u64, trial_seed: u64) -> Result<TrialRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let n = self.graph.nodes.len();
        let mut traces: Vec<Option<NodeTrace>> = vec![None; n];
        for &k in &self.order {
            let node = &self.graph.nodes[k];
            let (start, wait) = {
                let finishes = self.preds[k].iter().map(|&p| traces[p].as_ref().map_or(0.0, |t| t.finish));
                let (lo, hi) = finishes.fold((f64::INFINITY, 0.0f64), |(lo, hi), f| (lo.min(f), hi.max(f)));
                if self.preds[k].is_empty() {
                    (0.0, 0.0)
                } else {
                    (hi, hi - lo)
                }
            };
            let agent_idx = agents.by_node[k];
            let agent = &agents.agents[agent_idx];
            let trace = self
                .process_node(k, agent, start, wait, &mut rng)
                .map_err(|e| Error::NodeAbort {
                    node: node.id.clone(),
                    source: Box::new(e),
                })?;
            let agent = &mut agents.agents[agent_idx];
            agent.experience = update_experience(&agent.experience, &trace.outcome, agent.gain)?;
            traces[k] = Some(trace);
        }
        let nodes: Vec<NodeTrace> = traces.into_iter().map(|t| t.expect("every node processed")).collect();
        let total_time = nodes.iter().map(|t| t.finish).fold(0.0, f64::max);
        let all_hit = nodes.iter().all(|t| t.outcome.precision_hit);
        Ok(TrialRecord {
            trial_index,
            nodes,
            total_time,
            end_to_end_precision: if all_hit { 1.0 } else { 0.0 },
        })
    }

    fn process_node(&self, k: usize, agent: &Agent, start: f64, wait: f64, rng: &mut ChaCha8Rng) -> Result<NodeTrace> {
        let node = &self.graph.nodes[k];
        let info = realize_info(&node.info, rng)?;
        let kind = node.regime.kind();
        let mut external = Vec::new();
        let (precision_prob, hit, support) = match (&node.external, self.joint_masses[k]) {
            (Some(src), Some(mass)) => {
                sample_external(src, rng, &mut external);
                (mass, src.contains(&external), SupportDescription::TwoPoint)
            }
            _ => {
                let dist = build_distribution(&node.regime, &agent.experience, &info, RegimeContext::default())?;
                let p = dist.precision_prob();
                let u: f64 = rng.random();
                (p, u < p, dist.support())
            }
        };
        let precision_value = draw_precision_value(&node.regime.shape, support, hit, node.precision_target, rng);
        let time_spent = draw_time(&node.regime.time_model, rng)?;
        let outcome = EventOutcome {
            precision_hit: hit,
            precision_value,
            time_spent,
            regime: kind,
        };
        Ok(NodeTrace {
            outcome,
            precision_prob,
            info: info.magnitude,
            experience: agent.experience.magnitude(),
            start,
            finish: start + time_spent,
            dwell: wait + time_spent,
            external,
        })
    }
}

fn realize_info<R: Rng>(info: &InfoSource, rng: &mut R) -> Result<InfoSource> {
    if info.spread == 0.0 {
        return Ok(info.clone());
    }
    let u = match info.support {
        Support::Discrete => rng.random_range(0..=LATTICE_STEPS) as f64 / LATTICE_STEPS as f64,
        Support::Continuous => rng.random::<f64>(),
    };
    let magnitude = info.magnitude * (1.0 - info.spread + 2.0 * info.spread * u);
    InfoSource::with_shape(magnitude, info.support, info.dimension, 0.0)
}

/// Graded precision value consistent with the hit: at or above the target
/// on a hit, below it on a miss. Two-point regimes report 1/0, discrete
/// tilted regimes use the 11-level lattice and continuous ones a uniform
/// draw on the matching side of the target.
fn draw_precision_value<R: Rng>(shape: &RegimeShape, support: SupportDescription, hit: bool, target: f64, rng: &mut R) -> f64 {
    match (shape, support) {
        (_, SupportDescription::PointMass) => 1.0,
        (RegimeShape::DiscreteDecreasing | RegimeShape::DiscreteIncreasing, _) => {
            let steps = LATTICE_STEPS as f64;
            // lattice levels j / steps split at the target
            let first_hit = (target * steps - 1e-9).ceil().max(0.0) as u32;
            if hit {
                rng.random_range(first_hit.min(LATTICE_STEPS)..=LATTICE_STEPS) as f64 / steps
            } else if first_hit == 0 {
                0.0
            } else {
                rng.random_range(0..first_hit) as f64 / steps
            }
        }
        (_, SupportDescription::ContinuousTail) => {
            let u: f64 = rng.random();
            if hit {
                target + (1.0 - target) * u
            } else {
                target * u
            }
        }
        _ => {
            if hit {
                1.0
            } else {
                0.0
            }
        }
    }
}

fn draw_time<R: Rng>(model: &TimeModel, rng: &mut R) -> Result<f64> {
    let t = match *model {
        TimeModel::Fixed { base_time } => base_time,
        TimeModel::GeometricRetries {
            base_time,
            resolve_prob,
        } => {
            let attempts = if resolve_prob >= 1.0 {
                1.0
            } else {
                // inverse transform of the geometric distribution on {1, 2, ...}
                let u: f64 = 1.0 - rng.random::<f64>();
                1.0 + (u.ln() / (1.0 - resolve_prob).ln()).floor()
            };
            attempts * base_time
        }
        TimeModel::Exponential { rate } => {
            let exp = Exp::new(rate).map_err(|_| Error::Domain {
                arg: "time.rate",
                value: rate,
                expected: "(0, inf)",
            })?;
            exp.sample(rng).max(f64::MIN_POSITIVE)
        }
    };
    Ok(t)
}

/// Runs a single trial against a freshly prepared graph.
pub fn run_trial(g: &WorkflowGraph, agents: &Assignment, trial_seed: u64) -> Result<(TrialRecord, Assignment)> {
    let prepared = PreparedWorkflow::new(g, trial_seed)?;
    let mut next = agents.clone();
    let record = prepared.run_trial(&mut next, 0, trial_seed)?;
    Ok((record, next))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloOptions {
    pub n_trials: u64,
    pub master_seed: u64,
    /// `true`: every trial starts from the initial experience (i.i.d.
    /// ensemble). `false`: experience carries over (learning curve).
    pub reset_experience: bool,
    /// Worker threads for i.i.d. runs; learning runs accept only 1.
    pub workers: usize,
    /// Workflow instance arrival rate. When absent, instances run back to
    /// back and the rate is the inverse of the mean end-to-end time.
    pub arrival_rate: Option<f64>,
}

impl MonteCarloOptions {
    pub fn new(n_trials: u64, master_seed: u64) -> Self {
        Self {
            n_trials,
            master_seed,
            reset_experience: true,
            workers: 1,
            arrival_rate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub id: String,
    pub regime: RegimeKind,
    pub successes: u64,
    pub success_rate: f64,
    pub stderr: f64,
    /// Mean dwelling (wait + service) time.
    pub mean_time: f64,
    pub mean_service: f64,
    /// Binary entropy of the aggregate success rate.
    pub entropy_bits: f64,
    /// Mean per-event binary entropy of the modelled success probability.
    pub mean_event_entropy_bits: f64,
    /// Coefficient of variation of the node's output stream; absent with
    /// fewer than three trials.
    pub flow_cv: Option<f64>,
    pub utilization: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndSummary {
    pub successes: u64,
    pub success_rate: f64,
    pub stderr: f64,
    pub mean_total_time: f64,
}

pub const REPORT_FORMAT: &str = "wfprod-report";
pub const REPORT_VERSION: u32 = 1;

/// Aggregated ensemble statistics plus the full per-trial trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub trials: u64,
    pub reset_experience: bool,
    pub arrival_rate: f64,
    pub nodes: Vec<NodeSummary>,
    pub end_to_end: EndToEndSummary,
    pub trace: Vec<TrialRecord>,
}

/// Runs `opts.n_trials` trials and aggregates them.
pub fn run_monte_carlo(g: &WorkflowGraph, agents: &Assignment, opts: &MonteCarloOptions) -> Result<SimReport> {
    if opts.n_trials == 0 {
        return Err(Error::Domain {
            arg: "n_trials",
            value: 0.0,
            expected: "[1, inf)",
        });
    }
    if let Some(rate) = opts.arrival_rate {
        check_positive("arrival_rate", rate)?;
    }
    let workers = opts.workers.max(1);
    if !opts.reset_experience && workers > 1 {
        return Err(Error::ConcurrentLearning { workers });
    }
    let prepared = PreparedWorkflow::new(g, opts.master_seed)?;
    let annotate = |trial: u64| move |e: Error| Error::TrialAbort { trial, source: Box::new(e) };

    let trace: Vec<TrialRecord> = if opts.reset_experience {
        let run = |k: u64| {
            let mut own = agents.clone();
            prepared
                .run_trial(&mut own, k, derive_seed(opts.master_seed, k))
                .map_err(annotate(k))
        };
        if workers == 1 {
            (0..opts.n_trials).map(run).collect::<Result<_>>()?
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Data(format!("cannot start worker pool: {e}")))?;
            pool.install(|| (0..opts.n_trials).into_par_iter().map(run).collect::<Result<_>>())?
        }
    } else {
        let mut carried = agents.clone();
        (0..opts.n_trials)
            .map(|k| {
                prepared
                    .run_trial(&mut carried, k, derive_seed(opts.master_seed, k))
                    .map_err(annotate(k))
            })
            .collect::<Result<_>>()?
    };
    summarize(g, opts, trace)
}

fn summarize(g: &WorkflowGraph, opts: &MonteCarloOptions, trace: Vec<TrialRecord>) -> Result<SimReport> {
    let n = trace.len() as f64;
    let mean_total_time = trace.iter().map(|t| t.total_time).sum::<f64>() / n;
    let arrival_rate = opts.arrival_rate.unwrap_or(1.0 / mean_total_time);
    let mut nodes = Vec::with_capacity(g.nodes.len());
    for (k, node) in g.nodes.iter().enumerate() {
        let successes = trace.iter().filter(|t| t.nodes[k].outcome.precision_hit).count() as u64;
        let rate = successes as f64 / n;
        let mean_time = trace.iter().map(|t| t.nodes[k].dwell).sum::<f64>() / n;
        let mean_service = trace.iter().map(|t| t.nodes[k].outcome.time_spent).sum::<f64>() / n;
        let mut event_entropy = 0.0;
        for t in &trace {
            event_entropy += binary_entropy(t.nodes[k].precision_prob)?;
        }
        let completions = node_completions(&trace, k);
        let flow_cv = if completions.len() >= 3 {
            Some(flow_regularity(&completions)?)
        } else {
            None
        };
        let sat = saturation_flag(arrival_rate, 1.0 / mean_service)?;
        nodes.push(NodeSummary {
            id: node.id.clone(),
            regime: node.regime.kind(),
            successes,
            success_rate: rate,
            stderr: (rate * (1.0 - rate) / n).sqrt(),
            mean_time,
            mean_service,
            entropy_bits: binary_entropy(rate)?,
            mean_event_entropy_bits: event_entropy / n,
            flow_cv,
            utilization: sat.utilization,
            saturated: sat.saturated,
        });
    }
    let e2e = trace.iter().filter(|t| t.end_to_end_precision == 1.0).count() as u64;
    let e2e_rate = e2e as f64 / n;
    Ok(SimReport {
        format: REPORT_FORMAT.to_string(),
        version: REPORT_VERSION,
        seed: opts.master_seed,
        trials: trace.len() as u64,
        reset_experience: opts.reset_experience,
        arrival_rate,
        nodes,
        end_to_end: EndToEndSummary {
            successes: e2e,
            success_rate: e2e_rate,
            stderr: (e2e_rate * (1.0 - e2e_rate) / n).sqrt(),
            mean_total_time,
        },
        trace,
    })
}

/// Completion times of node `k` with instances run back to back.
fn node_completions(trace: &[TrialRecord], k: usize) -> Vec<f64> {
    let mut offset = 0.0;
    let mut out = Vec::with_capacity(trace.len());
    for t in trace {
        out.push(offset + t.nodes[k].finish);
        offset += t.total_time;
    }
    out
}

impl SimReport {
    pub fn node_index(&self, id: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n.id == id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn dwell_times(&self, id: &str) -> Result<Vec<f64>> {
        let k = self.node_index(id)?;
        Ok(self.trace.iter().map(|t| t.nodes[k].dwell).collect())
    }

    /// Per-trial modelled success probability at a node.
    pub fn precision_probs(&self, id: &str) -> Result<Vec<f64>> {
        let k = self.node_index(id)?;
        Ok(self.trace.iter().map(|t| t.nodes[k].precision_prob).collect())
    }

    /// Observation rows `(info, precision, time, experience)` for one node,
    /// with any external draws as covariates `s1..sn`.
    pub fn observations(&self, id: &str) -> Result<ObservationSet> {
        let k = self.node_index(id)?;
        let rows = self.trace.iter().map(|t| &t.nodes[k]);
        let info = rows.clone().map(|r| r.info).collect();
        let precision = rows.clone().map(|r| r.outcome.precision_value).collect();
        let time = rows.clone().map(|r| r.outcome.time_spent).collect();
        let experience = Some(rows.clone().map(|r| r.experience).collect());
        let dims = self.trace.first().map_or(0, |t| t.nodes[k].external.len());
        let covariates = (0..dims)
            .map(|d| (format!("s{}", d + 1), rows.clone().map(|r| r.external[d]).collect()))
            .collect();
        ObservationSet::new(info, precision, time, experience, covariates)
    }
}

/// Dwelling-time histogram of one node with Freedman–Diaconis bins.
pub fn dwelling_time_distribution(report: &SimReport, node: &str) -> Result<Histogram> {
    Histogram::freedman_diaconis(&report.dwell_times(node)?)
}

/// Maps node ids to their declaration index.
pub fn node_ids(g: &WorkflowGraph) -> BTreeMap<String, usize> {
    g.nodes.iter().enumerate().map(|(k, n)| (n.id.clone(), k)).collect()
}

/// Convenience constructor for tests and examples.
pub fn simple_node(id: &str, regime: RegimeSpec, info: InfoSource, precision_target: f64) -> Result<WorkNode> {
    check_probability("precision_target", precision_target)?;
    Ok(WorkNode {
        id: id.to_string(),
        info,
        regime,
        external: None,
        precision_target,
    })
}

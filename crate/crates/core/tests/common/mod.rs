#![allow(dead_code)]

use wfprod::model::{DensitySpec, Experience, ExternalSource, InfoSource, RegimeKind, Support, TimeModel};
use wfprod::regimes::{JointTable, RegimeShape, RegimeSpec};
use wfprod::simulator::{Agent, Assignment, WorkNode, WorkflowGraph};

pub fn fixed_time() -> TimeModel {
    TimeModel::Fixed { base_time: 1.0 }
}

pub fn node(id: &str, regime: RegimeSpec, info: InfoSource) -> WorkNode {
    WorkNode {
        id: id.to_string(),
        info,
        regime,
        external: None,
        precision_target: 0.5,
    }
}

pub fn bernoulli_node(id: &str, p: f64, time: TimeModel) -> WorkNode {
    node(
        id,
        RegimeSpec::new(RegimeShape::Bernoulli, p, time).unwrap(),
        InfoSource::new(1.0, Support::Discrete).unwrap(),
    )
}

pub fn chain(nodes: Vec<WorkNode>) -> WorkflowGraph {
    let edges = nodes.windows(2).map(|w| (w[0].id.clone(), w[1].id.clone())).collect();
    WorkflowGraph { nodes, edges }
}

pub fn agents_for(g: &WorkflowGraph, experience: f64, gain: f64) -> Assignment {
    let agents = g
        .nodes
        .iter()
        .map(|n| Agent::new(format!("agent-{}", n.id), Experience::new(experience).unwrap(), gain).unwrap())
        .collect();
    Assignment::one_per_node(g, agents).unwrap()
}

/// Single-node workflow with the canonical parameters of each regime, and the
/// agent experience that goes with it.
pub fn canonical(kind: RegimeKind) -> (WorkflowGraph, Assignment) {
    let discrete_spread = InfoSource::with_shape(4.0, Support::Discrete, 1, 0.5).unwrap();
    let continuous_spread = InfoSource::with_shape(4.0, Support::Continuous, 1, 0.5).unwrap();
    let (shape, base, info, experience, external) = match kind {
        RegimeKind::Bernoulli => (
            RegimeShape::Bernoulli,
            0.3,
            InfoSource::new(1.0, Support::Discrete).unwrap(),
            1.0,
            None,
        ),
        RegimeKind::Deterministic => (
            RegimeShape::Deterministic {
                table: JointTable::point_mass(vec![0]),
                success: vec![0],
            },
            1.0,
            InfoSource::new(1.0, Support::Discrete).unwrap(),
            1.0,
            None,
        ),
        RegimeKind::DiscreteDecreasing => (RegimeShape::DiscreteDecreasing, 0.5, discrete_spread, 8.0, None),
        RegimeKind::DiscreteIncreasing => (RegimeShape::DiscreteIncreasing, 0.6, discrete_spread, 1.0, None),
        RegimeKind::ContinuousDecreasing => (
            RegimeShape::ContinuousDecreasing {
                density: DensitySpec::uniform(0.0, 10.0).unwrap(),
                threshold: 1.0,
                ceiling: 10.0,
            },
            0.7,
            continuous_spread,
            8.0,
            None,
        ),
        RegimeKind::ContinuousIncreasing => (
            RegimeShape::ContinuousIncreasing {
                cdf: vec![(0.0, 0.0), (10.0, 1.0)],
                rate: 0.5,
            },
            0.5,
            continuous_spread,
            1.0,
            None,
        ),
        RegimeKind::JointExternal => (
            RegimeShape::JointExternal { samples: 10_000 },
            0.5,
            InfoSource::new(1.0, Support::Continuous).unwrap(),
            1.0,
            Some(
                ExternalSource::new(
                    vec![DensitySpec::uniform(0.0, 1.0).unwrap(), DensitySpec::uniform(0.0, 2.0).unwrap()],
                    vec![(0.0, 0.5), (0.0, 1.2)],
                )
                .unwrap(),
            ),
        ),
    };
    let mut n = node(
        &format!("node-{}", kind.letter()),
        RegimeSpec::new(shape, base, fixed_time()).unwrap(),
        info,
    );
    n.external = external;
    let g = WorkflowGraph {
        nodes: vec![n],
        edges: vec![],
    };
    let a = agents_for(&g, experience, 0.1);
    (g, a)
}

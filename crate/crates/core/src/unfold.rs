//! λ-equivalence classes of configurations and the unfolded layered MDP.
//!
//! Wealth between `L(s)` and `U(s)` is cut into half-open intervals
//! `(k λ, (k+1) λ]` anchored at 0 and clipped at `U(s)`. A class is
//! represented by its state and upper endpoint `w_D`; everything above
//! `U(s)` is `Win`, everything at or below `L(s)` is `Lose`. The unfolded
//! MDP replays the dynamics on upper endpoints, `w -> rho * w + F`, for a
//! fixed number of layers, materialising only classes reachable from the
//! initial one.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::bounds::BoundsTable;
use crate::error::{Error, Result};
use crate::model::{ActionId, Configuration, SolvencyMdp, StateId};
use crate::rational::Rational;

pub const DEFAULT_NODE_CAP: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassKind {
    Lose,
    /// Bounded class with exact upper endpoint `w_D`.
    Interval(Rational),
    Win,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WealthClass {
    pub state: StateId,
    pub kind: ClassKind,
}

impl WealthClass {
    pub fn is_absorbing(&self) -> bool {
        !matches!(self.kind, ClassKind::Interval(_))
    }

    pub fn upper(&self) -> Option<&Rational> {
        match &self.kind {
            ClassKind::Interval(w) => Some(w),
            _ => None,
        }
    }
}

impl fmt::Display for ClassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassKind::Lose => f.write_str("LOSE"),
            ClassKind::Win => f.write_str("WIN"),
            ClassKind::Interval(w) => write!(f, "{w}"),
        }
    }
}

/// The class `[s, x]_λ`.
pub fn classify(bounds: &BoundsTable, grid: &Rational, c: &Configuration) -> WealthClass {
    let kind = if c.wealth > bounds.upper[c.state] {
        ClassKind::Win
    } else if c.wealth <= bounds.lower[c.state] {
        ClassKind::Lose
    } else {
        let top = c.wealth.ceil_to_multiple(grid);
        ClassKind::Interval(top.min(bounds.upper[c.state].clone()))
    };
    WealthClass { state: c.state, kind }
}

pub type NodeId = usize;

#[derive(Debug, Clone)]
pub struct Edge {
    pub action: ActionId,
    pub dist: Vec<(NodeId, Rational)>,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub layer: usize,
    pub class: WealthClass,
    /// One entry per enabled action in declaration order; empty when the
    /// node is absorbing.
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone)]
pub struct UnfoldedMdp {
    pub grid: Rational,
    pub horizon: usize,
    pub nodes: Vec<Node>,
    /// Node ids per layer, in discovery order.
    pub layers: Vec<Vec<NodeId>>,
    pub initial: NodeId,
}

impl UnfoldedMdp {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn summary(&self) -> UnfoldSummary {
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(layer, ids)| {
                let mut s = LayerSummary {
                    layer,
                    nodes: ids.len(),
                    win: 0,
                    lose: 0,
                    interval: 0,
                };
                for &id in ids {
                    match self.nodes[id].class.kind {
                        ClassKind::Win => s.win += 1,
                        ClassKind::Lose => s.lose += 1,
                        ClassKind::Interval(_) => s.interval += 1,
                    }
                }
                s
            })
            .collect();
        UnfoldSummary {
            grid: self.grid.clone(),
            horizon: self.horizon,
            total_nodes: self.nodes.len(),
            layers,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerSummary {
    pub layer: usize,
    pub nodes: usize,
    pub win: usize,
    pub lose: usize,
    pub interval: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnfoldSummary {
    pub grid: Rational,
    pub horizon: usize,
    pub total_nodes: usize,
    pub layers: Vec<LayerSummary>,
}

/// Successor class of a bounded class under one transition.
pub fn step_class(
    m: &SolvencyMdp,
    bounds: &BoundsTable,
    grid: &Rational,
    upper: &Rational,
    gain: &Rational,
    next: StateId,
) -> WealthClass {
    classify(bounds, grid, &Configuration::new(next, m.next_wealth(upper, gain)))
}

/// Breadth-first construction of the reachable part of the unfolded MDP
/// with `horizon` layers after the initial one.
pub fn build_unfolded(
    m: &SolvencyMdp,
    bounds: &BoundsTable,
    grid: &Rational,
    horizon: usize,
    start: &Configuration,
    node_cap: usize,
) -> Result<UnfoldedMdp> {
    if !grid.is_positive() {
        return Err(Error::InvalidArgument(format!("grid {grid} must be positive")));
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let root = Node {
        layer: 0,
        class: classify(bounds, grid, start),
        edges: Vec::new(),
    };
    let mut nodes = vec![root];
    let mut layers = vec![vec![0]];

    for layer in 0..horizon {
        let mut index: HashMap<WealthClass, NodeId> = HashMap::new();
        let mut next_layer = Vec::new();
        let current = layers[layer].clone();
        for id in current {
            let Some(upper) = nodes[id].class.upper().cloned() else {
                continue;
            };
            let s = nodes[id].class.state;
            let mut edges = Vec::with_capacity(m.choices(s).len());
            for c in m.choices(s) {
                let mut dist = Vec::with_capacity(c.dist.len());
                for (t, p) in &c.dist {
                    let class = step_class(m, bounds, grid, &upper, &c.gain, *t);
                    let child = match index.get(&class) {
                        Some(&child) => child,
                        None => {
                            let child = nodes.len();
                            if child >= node_cap {
                                return Err(Error::NodeCap {
                                    layer: layer + 1,
                                    count: child + 1,
                                    cap: node_cap,
                                });
                            }
                            index.insert(class.clone(), child);
                            nodes.push(Node {
                                layer: layer + 1,
                                class,
                                edges: Vec::new(),
                            });
                            next_layer.push(child);
                            child
                        }
                    };
                    dist.push((child, p.clone()));
                }
                edges.push(Edge { action: c.action, dist });
            }
            nodes[id].edges = edges;
        }
        layers.push(next_layer);
        if layers[layer + 1].is_empty() {
            break;
        }
    }
    while layers.len() < horizon + 1 {
        layers.push(Vec::new());
    }
    Ok(UnfoldedMdp {
        grid: grid.clone(),
        horizon,
        nodes,
        layers,
        initial: 0,
    })
}

//! Maximal probability of reaching a `Win` class in the unfolded MDP, and
//! the wealth-independent strategy it induces in the original model.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::BoundsTable;
use crate::error::{Error, Result};
use crate::model::{ActionId, Configuration, SolvencyMdp, StateId};
use crate::par::{map_slice, Exec};
use crate::rational::Rational;
use crate::unfold::{step_class, ClassKind, NodeId, UnfoldedMdp, WealthClass};

/// Exact mode is chosen automatically up to this many `horizon * nodes`.
pub const EXACT_BUDGET: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReachMode {
    #[default]
    Auto,
    Exact,
    Float,
}

impl ReachMode {
    pub fn resolve(self, horizon: usize, nodes: usize) -> bool {
        match self {
            ReachMode::Exact => true,
            ReachMode::Float => false,
            ReachMode::Auto => horizon.saturating_mul(nodes) <= EXACT_BUDGET,
        }
    }
}

/// A probability, exact or double precision.
#[derive(Debug, Clone, PartialEq)]
pub enum Prob {
    Exact(Rational),
    Float(f64),
}

impl Prob {
    pub fn zero(exact: bool) -> Self {
        if exact {
            Prob::Exact(Rational::zero())
        } else {
            Prob::Float(0.0)
        }
    }

    pub fn one(exact: bool) -> Self {
        if exact {
            Prob::Exact(Rational::one())
        } else {
            Prob::Float(1.0)
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Prob::Exact(r) => r.to_f64(),
            Prob::Float(f) => *f,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            Prob::Exact(r) => Some(r),
            Prob::Float(_) => None,
        }
    }

    fn gt(&self, other: &Prob) -> bool {
        match (self, other) {
            (Prob::Exact(a), Prob::Exact(b)) => a > b,
            _ => self.to_f64() > other.to_f64(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Prob::Exact(r) => json!(r.to_string()),
            Prob::Float(f) => json!(f),
        }
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prob::Exact(r) => write!(f, "{r}"),
            Prob::Float(x) => write!(f, "{x}"),
        }
    }
}

/// A strategy that depends on the history of states and actions only.
///
/// It replays the class trajectory of the unfolded MDP: the cursor starts
/// at `root` and moves to the successor class of each observed transition.
/// `origin` is where the strategy is meant to be executed, which may lie
/// above the wealth the classes were built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredStrategy {
    pub origin: Configuration,
    pub root: WealthClass,
    pub grid: Rational,
    pub horizon: usize,
    pub choices: BTreeMap<(usize, WealthClass), ActionId>,
}

/// Position of a [`LayeredStrategy`] along a history.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cursor {
    pub layer: usize,
    pub state: StateId,
    /// `None` once the history has left the unfolded MDP.
    pub class: Option<WealthClass>,
}

impl LayeredStrategy {
    /// A strategy with no choices: every history plays the first enabled
    /// action.
    pub fn trivial(origin: Configuration, root: WealthClass, grid: Rational, horizon: usize) -> Self {
        LayeredStrategy {
            origin,
            root,
            grid,
            horizon,
            choices: BTreeMap::new(),
        }
    }

    pub fn start(&self) -> Cursor {
        Cursor {
            layer: 0,
            state: self.root.state,
            class: Some(self.root.clone()),
        }
    }

    /// The action at `cur`, or `None` where the unfolded MDP had a
    /// non-absorbing node but the strategy records nothing.
    pub fn lookup(&self, cur: &Cursor) -> Option<ActionId> {
        match &cur.class {
            Some(c) if !c.is_absorbing() && cur.layer < self.horizon => {
                self.choices.get(&(cur.layer, c.clone())).copied()
            }
            _ => None,
        }
    }

    /// Whether the cursor sits on a node where a choice is required.
    pub fn is_live(&self, cur: &Cursor) -> bool {
        matches!(&cur.class, Some(c) if !c.is_absorbing()) && cur.layer < self.horizon
    }

    /// The action to play, falling back to the first enabled one outside the
    /// unfolded MDP.
    pub fn action(&self, m: &SolvencyMdp, cur: &Cursor) -> Result<ActionId> {
        if self.is_live(cur) {
            return self.lookup(cur).ok_or_else(|| Error::StrategyUndefined {
                layer: cur.layer,
                state: m.state_name(cur.state).to_string(),
            });
        }
        Ok(m.choices(cur.state)[0].action)
    }

    pub fn advance(
        &self,
        m: &SolvencyMdp,
        bounds: &BoundsTable,
        cur: &Cursor,
        action: ActionId,
        next: StateId,
    ) -> Cursor {
        let class = if self.is_live(cur) {
            let c = cur.class.as_ref().expect("live cursor has a class");
            let gain = &m.choice(cur.state, action).expect("enabled action").gain;
            let upper = c.upper().expect("live class is bounded");
            Some(step_class(m, bounds, &self.grid, upper, gain, next))
        } else {
            None
        };
        Cursor {
            layer: cur.layer + 1,
            state: next,
            class,
        }
    }

    pub fn with_origin(mut self, origin: Configuration) -> Self {
        self.origin = origin;
        self
    }

    pub fn to_json(&self, m: &SolvencyMdp) -> Value {
        let choices: Vec<ChoiceDoc> = self
            .choices
            .iter()
            .map(|((layer, class), a)| ChoiceDoc {
                layer: *layer,
                state: m.state_name(class.state).to_string(),
                class: class.kind.to_string(),
                action: m.action_name(*a).to_string(),
            })
            .collect();
        let doc = StrategyDoc {
            origin: ConfigDoc {
                state: m.state_name(self.origin.state).to_string(),
                wealth: self.origin.wealth.clone(),
            },
            root: ChoiceRoot {
                state: m.state_name(self.root.state).to_string(),
                class: self.root.kind.to_string(),
            },
            grid: self.grid.clone(),
            horizon: self.horizon,
            choices,
        };
        serde_json::to_value(doc).expect("strategy serializes")
    }

    pub fn from_json(m: &SolvencyMdp, v: &Value) -> Result<Self> {
        let doc: StrategyDoc = serde_json::from_value(v.clone()).map_err(|e| Error::Malformed(e.to_string()))?;
        let mut choices = BTreeMap::new();
        for c in &doc.choices {
            let state = m.state_id(&c.state)?;
            let action = m
                .action_id(&c.action)
                .filter(|a| m.choice(state, *a).is_some())
                .ok_or_else(|| Error::Malformed(format!("action {:?} not enabled at {:?}", c.action, c.state)))?;
            choices.insert((c.layer, parse_class(state, &c.class)?), action);
        }
        let root_state = m.state_id(&doc.root.state)?;
        Ok(LayeredStrategy {
            origin: Configuration::new(m.state_id(&doc.origin.state)?, doc.origin.wealth),
            root: parse_class(root_state, &doc.root.class)?,
            grid: doc.grid,
            horizon: doc.horizon,
            choices,
        })
    }
}

fn parse_class(state: StateId, text: &str) -> Result<WealthClass> {
    let kind = match text {
        "WIN" => ClassKind::Win,
        "LOSE" => ClassKind::Lose,
        w => ClassKind::Interval(w.parse().map_err(|_| Error::Malformed(format!("bad class {w:?}")))?),
    };
    Ok(WealthClass { state, kind })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    state: String,
    wealth: Rational,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChoiceRoot {
    state: String,
    class: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChoiceDoc {
    layer: usize,
    state: String,
    class: String,
    action: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategyDoc {
    origin: ConfigDoc,
    root: ChoiceRoot,
    grid: Rational,
    horizon: usize,
    choices: Vec<ChoiceDoc>,
}

#[derive(Debug, Clone)]
pub struct ReachResult {
    pub value: Prob,
    pub per_node: Vec<Prob>,
    /// Argmax edge index per node; `None` on absorbing nodes.
    pub argmax: Vec<Option<usize>>,
    pub exact: bool,
}

/// Backward induction over the layers; each layer is evaluated in
/// parallel under [`Exec::Parallel`].
pub fn max_hit_probability(u: &UnfoldedMdp, mode: ReachMode, exec: Exec) -> ReachResult {
    let exact = mode.resolve(u.horizon, u.len());
    let mut per_node: Vec<Option<Prob>> = vec![None; u.len()];
    let mut argmax: Vec<Option<usize>> = vec![None; u.len()];
    for layer in (0..u.layers.len()).rev() {
        let ids = &u.layers[layer];
        let values = map_slice(exec, ids, |&id| node_value(u, id, &per_node, exact));
        for (&id, (v, best)) in ids.iter().zip(values) {
            per_node[id] = Some(v);
            argmax[id] = best;
        }
    }
    let per_node: Vec<Prob> = per_node.into_iter().map(|v| v.expect("every node valued")).collect();
    ReachResult {
        value: per_node[u.initial].clone(),
        per_node,
        argmax,
        exact,
    }
}

fn node_value(u: &UnfoldedMdp, id: NodeId, values: &[Option<Prob>], exact: bool) -> (Prob, Option<usize>) {
    let node = u.node(id);
    match node.class.kind {
        ClassKind::Win => return (Prob::one(exact), None),
        ClassKind::Lose => return (Prob::zero(exact), None),
        ClassKind::Interval(_) if node.edges.is_empty() => return (Prob::zero(exact), None),
        ClassKind::Interval(_) => {}
    }
    let child = |c: NodeId| values[c].as_ref().expect("next layer valued");
    let mut best: Option<(Prob, usize)> = None;
    for (i, e) in node.edges.iter().enumerate() {
        let q = if exact {
            let mut acc = Rational::zero();
            for (c, p) in &e.dist {
                acc += p * child(*c).exact().expect("exact values");
            }
            Prob::Exact(acc)
        } else {
            let mut acc = 0.0;
            for (c, p) in &e.dist {
                acc += p.to_f64() * child(*c).to_f64();
            }
            Prob::Float(acc)
        };
        if best.as_ref().is_none_or(|(b, _)| q.gt(b)) {
            best = Some((q, i));
        }
    }
    let (v, i) = best.expect("bounded node has edges");
    (v, Some(i))
}

/// The strategy playing the argmax action at every reachable bounded node.
pub fn lift_strategy(r: &ReachResult, u: &UnfoldedMdp, origin: Configuration) -> LayeredStrategy {
    let mut choices = BTreeMap::new();
    for (id, node) in u.nodes.iter().enumerate() {
        if let Some(i) = r.argmax[id] {
            choices.insert((node.layer, node.class.clone()), node.edges[i].action);
        }
    }
    LayeredStrategy {
        origin,
        root: u.node(u.initial).class.clone(),
        grid: u.grid.clone(),
        horizon: u.horizon,
        choices,
    }
}

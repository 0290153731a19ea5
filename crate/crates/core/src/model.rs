//! Solvency and discounted MDPs, their JSON form, and the conversions
//! between them.
//!
//! A solvency MDP moves a configuration `(s, x)` under action `a` to
//! `(t, rho * x + F(s, a))` with probability `T(s, a)(t)`. The discounted
//! view of the same structure reads `beta = 1 / rho`, and winning from
//! wealth `x` coincides with the discounted reward clearing the threshold
//! `-x`.

use std::collections::HashMap;
use std::ops::Deref;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub type StateId = usize;
pub type ActionId = usize;

/// One enabled action at a state: its gain and sparse successor
/// distribution. The support is ordered by state declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Choice {
    pub action: ActionId,
    pub gain: Rational,
    pub dist: Vec<(StateId, Rational)>,
}

/// The rate-free part of a model: states, actions and transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    states: Vec<String>,
    actions: Vec<String>,
    choices: Vec<Vec<Choice>>,
    state_index: HashMap<String, StateId>,
    action_index: HashMap<String, ActionId>,
}

impl Structure {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        0..self.states.len()
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s]
    }

    pub fn state_id(&self, name: &str) -> Result<StateId> {
        self.state_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.actions[a]
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.action_index.get(name).copied()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    /// Enabled actions at `s`, in declaration order.
    pub fn choices(&self, s: StateId) -> &[Choice] {
        &self.choices[s]
    }

    pub fn choice(&self, s: StateId, a: ActionId) -> Option<&Choice> {
        self.choices[s].iter().find(|c| c.action == a)
    }

    pub fn max_abs_gain(&self) -> Rational {
        self.choices
            .iter()
            .flatten()
            .map(|c| c.gain.abs())
            .fold(Rational::zero(), Rational::max)
    }

    pub fn is_markov_chain(&self) -> bool {
        self.choices.iter().all(|c| c.len() == 1)
    }

    fn validate(&self) -> Result<()> {
        if self.states.is_empty() {
            return Err(Error::InvalidModel("no states".into()));
        }
        for s in self.states() {
            let cs = &self.choices[s];
            if cs.is_empty() {
                return Err(Error::InvalidModel(format!("empty A(s) at state {:?}", self.states[s])));
            }
            for c in cs {
                if c.dist.is_empty() {
                    return Err(Error::InvalidModel(format!(
                        "action {:?} at state {:?} has an empty distribution",
                        self.actions[c.action], self.states[s]
                    )));
                }
                let mut total = Rational::zero();
                for (t, p) in &c.dist {
                    if !p.is_positive() || *p > Rational::one() {
                        return Err(Error::InvalidModel(format!(
                            "probability {p} to {:?} under {:?} at {:?} is outside (0,1]",
                            self.states[*t], self.actions[c.action], self.states[s]
                        )));
                    }
                    total += p;
                }
                if total != Rational::one() {
                    return Err(Error::InvalidModel(format!(
                        "distribution does not sum to 1: {:?} at {:?} sums to {total}",
                        self.actions[c.action], self.states[s]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// State name, action name, gain and distribution of a declared action.
type PendingAction = (String, String, Rational, Vec<(String, Rational)>);

/// Incremental construction of a [`Structure`].
#[derive(Debug, Default)]
pub struct ModelBuilder {
    states: Vec<String>,
    actions: Vec<String>,
    pending: Vec<PendingAction>,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&mut self, name: impl Into<String>) -> &mut Self {
        self.states.push(name.into());
        self
    }

    pub fn action<S: Into<String>>(
        &mut self,
        state: impl Into<String>,
        name: impl Into<String>,
        gain: Rational,
        dist: impl IntoIterator<Item = (S, Rational)>,
    ) -> &mut Self {
        let dist = dist.into_iter().map(|(t, p)| (t.into(), p)).collect();
        self.pending.push((state.into(), name.into(), gain, dist));
        self
    }

    pub fn build(&self) -> Result<Structure> {
        let mut state_index = HashMap::new();
        for (i, s) in self.states.iter().enumerate() {
            if state_index.insert(s.clone(), i).is_some() {
                return Err(Error::InvalidModel(format!("duplicate state {s:?}")));
            }
        }
        let mut actions = self.actions.clone();
        let mut action_index: HashMap<String, ActionId> = HashMap::new();
        let mut choices: Vec<Vec<Choice>> = vec![Vec::new(); self.states.len()];
        for (state, name, gain, dist) in &self.pending {
            let s = *state_index
                .get(state)
                .ok_or_else(|| Error::UnknownState(state.clone()))?;
            let a = *action_index.entry(name.clone()).or_insert_with(|| {
                actions.push(name.clone());
                actions.len() - 1
            });
            if choices[s].iter().any(|c| c.action == a) {
                return Err(Error::InvalidModel(format!(
                    "action {name:?} declared twice at state {state:?}"
                )));
            }
            let mut sparse = Vec::with_capacity(dist.len());
            for (t, p) in dist {
                let t = *state_index.get(t).ok_or_else(|| Error::UnknownState(t.clone()))?;
                if sparse.iter().any(|(u, _)| *u == t) {
                    return Err(Error::InvalidModel(format!(
                        "successor {:?} listed twice under {name:?} at {state:?}",
                        self.states[t]
                    )));
                }
                sparse.push((t, p.clone()));
            }
            sparse.sort_by_key(|(t, _)| *t);
            choices[s].push(Choice {
                action: a,
                gain: gain.clone(),
                dist: sparse,
            });
        }
        let structure = Structure {
            states: self.states.clone(),
            actions,
            choices,
            state_index,
            action_index,
        };
        structure.validate()?;
        Ok(structure)
    }

    pub fn build_solvency(&self, rho: Rational) -> Result<SolvencyMdp> {
        SolvencyMdp::new(self.build()?, rho)
    }

    pub fn build_discounted(&self, beta: Rational) -> Result<DiscountedMdp> {
        DiscountedMdp::new(self.build()?, beta)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolvencyMdp {
    structure: Structure,
    rho: Rational,
}

impl SolvencyMdp {
    pub fn new(structure: Structure, rho: Rational) -> Result<Self> {
        if rho <= Rational::one() {
            return Err(Error::InvalidModel(format!("interest rate rho = {rho} must exceed 1")));
        }
        structure.validate()?;
        Ok(SolvencyMdp { structure, rho })
    }

    pub fn rho(&self) -> &Rational {
        &self.rho
    }

    /// Discount factor `1 / rho` of the associated discounted MDP.
    pub fn beta(&self) -> Rational {
        self.rho.recip()
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// Wealth after playing a choice with gain `gain` from wealth `x`.
    pub fn next_wealth(&self, x: &Rational, gain: &Rational) -> Rational {
        &self.rho * x + gain
    }

    pub fn to_discounted(&self) -> DiscountedMdp {
        DiscountedMdp {
            structure: self.structure.clone(),
            beta: self.rho.recip(),
        }
    }
}

impl Deref for SolvencyMdp {
    type Target = Structure;
    fn deref(&self) -> &Structure {
        &self.structure
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscountedMdp {
    structure: Structure,
    beta: Rational,
}

impl DiscountedMdp {
    pub fn new(structure: Structure, beta: Rational) -> Result<Self> {
        if !beta.is_positive() || beta >= Rational::one() {
            return Err(Error::InvalidModel(format!("discount beta = {beta} must lie in (0,1)")));
        }
        structure.validate()?;
        Ok(DiscountedMdp { structure, beta })
    }

    pub fn beta(&self) -> &Rational {
        &self.beta
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn to_solvency(&self) -> SolvencyMdp {
        SolvencyMdp {
            structure: self.structure.clone(),
            rho: self.beta.recip(),
        }
    }
}

impl Deref for DiscountedMdp {
    type Target = Structure;
    fn deref(&self) -> &Structure {
        &self.structure
    }
}

/// Winning from wealth `x` is the threshold event `disc >= -x`.
pub fn wealth_to_threshold(x: &Rational) -> Rational {
    -x
}

/// A state-wealth pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub state: StateId,
    pub wealth: Rational,
}

impl Configuration {
    pub fn new(state: StateId, wealth: Rational) -> Self {
        Configuration { state, wealth }
    }
}

/// Either kind of model, as read from a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Model {
    Solvency(SolvencyMdp),
    Discounted(DiscountedMdp),
}

impl Model {
    pub fn structure(&self) -> &Structure {
        match self {
            Model::Solvency(m) => m.structure(),
            Model::Discounted(d) => d.structure(),
        }
    }

    /// The solvency view, converting a discounted model with `rho = 1/beta`.
    pub fn into_solvency(self) -> SolvencyMdp {
        match self {
            Model::Solvency(m) => m,
            Model::Discounted(d) => d.to_solvency(),
        }
    }

    pub fn into_discounted(self) -> DiscountedMdp {
        match self {
            Model::Solvency(m) => m.to_discounted(),
            Model::Discounted(d) => d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Solvency,
    Discounted,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionDoc {
    name: String,
    gain: Rational,
    dist: IndexMap<String, Rational>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<Rational>,
    states: Vec<String>,
    actions: IndexMap<String, Vec<ActionDoc>>,
}

/// Parse and validate a model document.
pub fn parse_model(text: &str) -> Result<Model> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    let mut b = ModelBuilder::new();
    for s in &doc.states {
        b.state(s.clone());
    }
    for key in doc.actions.keys() {
        if !doc.states.contains(key) {
            return Err(Error::UnknownState(key.clone()));
        }
    }
    for s in &doc.states {
        let list = doc
            .actions
            .get(s)
            .ok_or_else(|| Error::InvalidModel(format!("empty A(s) at state {s:?}: no actions listed")))?;
        for a in list {
            b.action(
                s.clone(),
                a.name.clone(),
                a.gain.clone(),
                a.dist.iter().map(|(t, p)| (t.clone(), p.clone())),
            );
        }
    }
    match doc.kind {
        Kind::Solvency => {
            if doc.beta.is_some() {
                return Err(Error::Malformed("solvency model must not carry beta".into()));
            }
            let rho = doc
                .rho
                .ok_or_else(|| Error::Malformed("solvency model is missing rho".into()))?;
            Ok(Model::Solvency(b.build_solvency(rho)?))
        }
        Kind::Discounted => {
            if doc.rho.is_some() {
                return Err(Error::Malformed("discounted model must not carry rho".into()));
            }
            let beta = doc
                .beta
                .ok_or_else(|| Error::Malformed("discounted model is missing beta".into()))?;
            Ok(Model::Discounted(b.build_discounted(beta)?))
        }
    }
}

fn structure_doc(st: &Structure) -> IndexMap<String, Vec<ActionDoc>> {
    st.states()
        .map(|s| {
            let list = st
                .choices(s)
                .iter()
                .map(|c| ActionDoc {
                    name: st.action_name(c.action).to_string(),
                    gain: c.gain.clone(),
                    dist: c
                        .dist
                        .iter()
                        .map(|(t, p)| (st.state_name(*t).to_string(), p.clone()))
                        .collect(),
                })
                .collect();
            (st.state_name(s).to_string(), list)
        })
        .collect()
}

/// Render a model in the document schema accepted by [`parse_model`].
pub fn model_to_json(model: &Model) -> serde_json::Value {
    let st = model.structure();
    let (kind, rho, beta) = match model {
        Model::Solvency(m) => (Kind::Solvency, Some(m.rho().clone()), None),
        Model::Discounted(d) => (Kind::Discounted, None, Some(d.beta().clone())),
    };
    let doc = ModelDoc {
        kind,
        rho,
        beta,
        states: st.states().map(|s| st.state_name(s).to_string()).collect(),
        actions: structure_doc(st),
    };
    serde_json::to_value(doc).expect("model document serializes")
}

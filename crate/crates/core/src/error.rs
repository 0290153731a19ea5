use thiserror::Error;

use crate::rational::Rational;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed model document: {0}")]
    Malformed(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown state {0:?}")]
    UnknownState(String),

    /// The unfolded MDP grew past the configured node cap.
    #[error("node cap exceeded at layer {layer}: {count} nodes (cap {cap})")]
    NodeCap { layer: usize, count: usize, cap: usize },

    /// The exact-wealth oracle tree is exponential in the horizon.
    #[error("oracle horizon {horizon} exceeds cap {cap}")]
    HorizonCap { horizon: usize, cap: usize },

    /// WR(s,0) is minus infinity: every wealth wins with probability >= 0.
    #[error("WR(s,0) = -inf")]
    ZeroProbability,

    /// U(M) = L(M); the bisection parameters are undefined.
    #[error("degenerate model: U(M) = L(M) = {0}")]
    Degenerate(Rational),

    /// Knapsack gadget with p > 1: the instance has no solution.
    #[error("UNSOLVABLE: knapsack threshold p = {0} exceeds 1")]
    Unsolvable(Rational),

    #[error("strategy undefined at layer {layer} in state {state:?}")]
    StrategyUndefined { layer: usize, state: String },
}

//! Solvers for solvency Markov decision processes with interest.
//!
//! A solvency MDP carries a wealth that is multiplied by an interest rate
//! `rho > 1` every step and shifted by the gain of the chosen action. The
//! crate computes exact safe/doomed wealth bounds, solves the almost-sure
//! winning problem exactly, and approximates the minimal wealth `WR(s,p)`
//! needed to avoid bankruptcy with probability `p`.

pub mod approx;
pub mod bounds;
pub mod error;
mod fixpoint;
pub mod knapsack;
pub mod model;
pub mod oracle;
pub mod par;
pub mod qualitative;
pub mod rational;
pub mod reach;
pub mod unfold;

pub use approx::{approx_wr, compute_params, value_approx, var_approx, ApproxOptions, ApproxParams};
pub use bounds::{compute_bounds, is_rentier, BoundsTable};
pub use error::{Error, Result};
pub use model::{parse_model, Configuration, DiscountedMdp, Model, ModelBuilder, SolvencyMdp};
pub use qualitative::{solve_qualitative, ObliviousStrategy, QualitativeResult};
pub use rational::{rat, Rational};
pub use reach::{max_hit_probability, LayeredStrategy, ReachMode, ReachResult};
pub use unfold::{build_unfolded, classify, UnfoldedMdp, WealthClass};

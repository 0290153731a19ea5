//! Almost-sure winning: `WR(s,1)` and an oblivious witnessing strategy.
//!
//! A strategy wins almost surely iff every run it can realise clears the
//! threshold, so the random successor is effectively chosen by an
//! adversary. The worst-case discounted value
//!
//! ```text
//! V(s) = max_a min_{t in Succ(s,a)} beta * (F(s,a) + V(t)),   beta = 1/rho
//! ```
//!
//! gives `WR(s,1) = -V(s)`. It is solved exactly by strategy iteration on
//! the controller's action choice with an exact inner minimisation over
//! successors.

use crate::fixpoint::{evaluate_selector, policy_iteration, Arc, Sense};
use crate::model::{ActionId, SolvencyMdp, StateId};
use crate::rational::Rational;

/// A state-indexed action choice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObliviousStrategy {
    pub choice: Vec<ActionId>,
}

impl ObliviousStrategy {
    pub fn action(&self, s: StateId) -> ActionId {
        self.choice[s]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualitativeResult {
    pub worst_case_value: Vec<Rational>,
    pub wr_one: Vec<Rational>,
    pub strategy: ObliviousStrategy,
}

pub fn solve_qualitative(m: &SolvencyMdp) -> QualitativeResult {
    let n = m.num_states();
    let beta = m.beta();
    // controller's choice index per state, adversary's support index per state
    let mut act = vec![0usize; n];
    let mut adv = vec![0usize; n];
    let mut value;
    loop {
        let arcs: Vec<Vec<Arc>> = m
            .states()
            .map(|s| {
                let c = &m.choices(s)[act[s]];
                c.dist
                    .iter()
                    .map(|(t, _)| Arc {
                        reward: c.gain.clone(),
                        target: *t,
                    })
                    .collect()
            })
            .collect();
        let (v, pick) = policy_iteration(&arcs, &beta, Sense::Min, adv);
        adv = pick;
        value = v;

        let mut changed = false;
        for s in m.states() {
            let mut best = act[s];
            let mut best_q = worst_successor(m, &beta, &value, s, best).0;
            for (i, _) in m.choices(s).iter().enumerate() {
                let q = worst_successor(m, &beta, &value, s, i).0;
                if q > best_q {
                    best = i;
                    best_q = q;
                }
            }
            if best != act[s] {
                act[s] = best;
                adv[s] = worst_successor(m, &beta, &value, s, best).1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let wr_one = value.iter().map(|v| -v).collect();
    let choice = m.states().map(|s| m.choices(s)[act[s]].action).collect();
    QualitativeResult {
        worst_case_value: value,
        wr_one,
        strategy: ObliviousStrategy { choice },
    }
}

/// `min_t beta (F + V(t))` for the `i`-th choice at `s`, with the first
/// minimising support index.
fn worst_successor(m: &SolvencyMdp, beta: &Rational, v: &[Rational], s: StateId, i: usize) -> (Rational, usize) {
    let c = &m.choices(s)[i];
    let mut best: Option<(Rational, usize)> = None;
    for (j, (t, _)) in c.dist.iter().enumerate() {
        let q = beta * &(&c.gain + &v[*t]);
        if best.as_ref().is_none_or(|(b, _)| q < *b) {
            best = Some((q, j));
        }
    }
    best.expect("nonempty support")
}

/// Exact worst-case value of a fixed oblivious strategy.
pub fn evaluate_oblivious(m: &SolvencyMdp, sigma: &ObliviousStrategy) -> Vec<Rational> {
    let beta = m.beta();
    let arcs: Vec<Vec<Arc>> = m
        .states()
        .map(|s| {
            let c = m.choice(s, sigma.action(s)).expect("strategy picks an enabled action");
            c.dist
                .iter()
                .map(|(t, _)| Arc {
                    reward: c.gain.clone(),
                    target: *t,
                })
                .collect()
        })
        .collect();
    let init = vec![0; m.num_states()];
    policy_iteration(&arcs, &beta, Sense::Min, init).0
}

/// Floating-point value iteration of the max-min operator, stopped once
/// successive iterates differ by less than `tol * (1 - beta) / beta`, which
/// bounds the distance to the fixed point by `tol`. A cross-check only.
pub fn value_iteration(m: &SolvencyMdp, tol: f64) -> (Vec<f64>, usize) {
    let beta = m.beta().to_f64();
    let stop = tol * (1.0 - beta) / beta;
    let mut v = vec![0.0f64; m.num_states()];
    let mut iters = 0;
    loop {
        iters += 1;
        let next: Vec<f64> = m
            .states()
            .map(|s| {
                m.choices(s)
                    .iter()
                    .map(|c| {
                        let g = c.gain.to_f64();
                        c.dist
                            .iter()
                            .map(|(t, _)| beta * (g + v[*t]))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let diff = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if diff < stop {
            return (v, iters);
        }
    }
}

/// Exact worst-case value when every state has a single action.
pub fn markov_chain_worst_case(m: &SolvencyMdp) -> Option<Vec<Rational>> {
    if !m.is_markov_chain() {
        return None;
    }
    let beta = m.beta();
    let arcs: Vec<Vec<Arc>> = m
        .states()
        .map(|s| {
            let c = &m.choices(s)[0];
            c.dist
                .iter()
                .map(|(t, _)| Arc {
                    reward: c.gain.clone(),
                    target: *t,
                })
                .collect()
        })
        .collect();
    let (_, pick) = policy_iteration(&arcs, &beta, Sense::Min, vec![0; m.num_states()]);
    let succ: Vec<usize> = m.states().map(|s| arcs[s][pick[s]].target).collect();
    let reward: Vec<Rational> = m.states().map(|s| arcs[s][pick[s]].reward.clone()).collect();
    Some(evaluate_selector(&succ, &reward, &beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::compute_bounds;
    use crate::model::fixtures::example22;
    use crate::model::ModelBuilder;
    use crate::rational::rat;

    /// Enumerate every oblivious controller choice and, for each, every
    /// deterministic adversary selector; evaluate exactly and take
    /// max over controller of min over adversary.
    fn brute_force(m: &SolvencyMdp) -> Vec<Rational> {
        let beta = m.beta();
        let n = m.num_states();
        let counts: Vec<usize> = m.states().map(|s| m.choices(s).len()).collect();
        let mut best: Option<Vec<Rational>> = None;
        for_each_tuple(&counts, |acts| {
            let sup: Vec<usize> = m.states().map(|s| m.choices(s)[acts[s]].dist.len()).collect();
            let mut worst: Option<Vec<Rational>> = None;
            for_each_tuple(&sup, |picks| {
                let succ: Vec<usize> = (0..n).map(|s| m.choices(s)[acts[s]].dist[picks[s]].0).collect();
                let rew: Vec<Rational> = (0..n).map(|s| m.choices(s)[acts[s]].gain.clone()).collect();
                let x = evaluate_selector(&succ, &rew, &beta);
                worst = Some(match worst.take() {
                    None => x,
                    Some(w) => w.into_iter().zip(x).map(|(a, b)| a.min(b)).collect(),
                });
            });
            let w = worst.unwrap();
            best = Some(match best.take() {
                None => w,
                Some(b) => b.into_iter().zip(w).map(|(a, b)| a.max(b)).collect(),
            });
        });
        best.unwrap()
    }

    fn for_each_tuple(counts: &[usize], mut f: impl FnMut(&[usize])) {
        let mut idx = vec![0; counts.len()];
        loop {
            f(&idx);
            let mut i = 0;
            loop {
                if i == counts.len() {
                    return;
                }
                idx[i] += 1;
                if idx[i] < counts[i] {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn example22_work_wins_from_minus_two() {
        let m = example22();
        let r = solve_qualitative(&m);
        assert_eq!(r.worst_case_value[0], rat(2, 1));
        assert_eq!(r.wr_one[0], rat(-2, 1));
        assert_eq!(m.action_name(r.strategy.action(0)), "work");
        assert_eq!(r.worst_case_value, brute_force(&m));
    }

    #[test]
    fn work_only_chain() {
        let mut b = ModelBuilder::new();
        b.state("s0").state("s1").state("s2");
        b.action("s0", "work", rat(2, 1), [("s0", rat(1, 1))]);
        b.action("s1", "profit", rat(60, 1), [("s0", rat(1, 1))]);
        b.action("s2", "loss", rat(0, 1), [("s0", rat(1, 1))]);
        let m = b.build_solvency(rat(2, 1)).unwrap();
        let r = solve_qualitative(&m);
        assert_eq!(r.wr_one[0], rat(-2, 1));
        assert_eq!(markov_chain_worst_case(&m).unwrap(), r.worst_case_value);
    }

    #[test]
    fn zero_gains() {
        let mut b = ModelBuilder::new();
        b.state("a").state("b");
        b.action("a", "x", rat(0, 1), [("a", rat(1, 2)), ("b", rat(1, 2))]);
        b.action("a", "y", rat(0, 1), [("b", rat(1, 1))]);
        b.action("b", "z", rat(0, 1), [("a", rat(1, 1))]);
        let m = b.build_solvency(rat(5, 4)).unwrap();
        let r = solve_qualitative(&m);
        assert!(r.wr_one.iter().all(Rational::is_zero));
    }

    #[test]
    fn sandwiched_by_bounds_and_matches_value_iteration() {
        let m = example22();
        let r = solve_qualitative(&m);
        let b = compute_bounds(&m);
        for s in m.states() {
            assert!(b.lower[s] <= r.wr_one[s] && r.wr_one[s] <= b.upper[s]);
        }
        let (vi, _) = value_iteration(&m, 1e-9);
        for s in m.states() {
            assert!((vi[s] - r.worst_case_value[s].to_f64()).abs() <= 1e-9);
        }
        assert_eq!(evaluate_oblivious(&m, &r.strategy), r.worst_case_value);
    }
}

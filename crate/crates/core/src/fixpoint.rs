//! Exact evaluation of deterministic selectors.
//!
//! A selector fixes one successor per state, giving the linear system
//! `x[s] = beta * (reward[s] + x[succ[s]])`. Its dependency graph is a
//! functional graph: every component is a single cycle with trees hanging
//! off it, so the system solves in closed form without elimination.

use crate::rational::Rational;

/// Solve `x[s] = beta * (reward[s] + x[succ[s]])` exactly.
pub(crate) fn evaluate_selector(succ: &[usize], reward: &[Rational], beta: &Rational) -> Vec<Rational> {
    let n = succ.len();
    debug_assert_eq!(reward.len(), n);
    // 0 = unvisited, 1 = on the current walk, 2 = solved
    let mut mark = vec![0u8; n];
    let mut value: Vec<Option<Rational>> = vec![None; n];

    for start in 0..n {
        if mark[start] != 0 {
            continue;
        }
        let mut walk = Vec::new();
        let mut s = start;
        while mark[s] == 0 {
            mark[s] = 1;
            walk.push(s);
            s = succ[s];
        }
        if mark[s] == 1 {
            // `s` closes a cycle on the current walk.
            let pos = walk.iter().position(|&u| u == s).expect("cycle entry on walk");
            let cycle = &walk[pos..];
            let k = cycle.len() as i64;
            // x[c0] = sum_j beta^(j+1) r[c_j] + beta^k x[c0]
            let mut acc = Rational::zero();
            let mut pow = beta.clone();
            for &c in cycle {
                acc += &pow * &reward[c];
                pow = &pow * beta;
            }
            let head = acc / (Rational::one() - beta.pow(k));
            value[s] = Some(head);
            mark[s] = 2;
            for &c in cycle.iter().skip(1).rev() {
                let next = value[succ[c]].as_ref().expect("successor solved");
                value[c] = Some(beta * &(&reward[c] + next));
                mark[c] = 2;
            }
            walk.truncate(pos);
        }
        while let Some(u) = walk.pop() {
            let next = value[succ[u]].as_ref().expect("successor solved");
            value[u] = Some(beta * &(&reward[u] + next));
            mark[u] = 2;
        }
    }
    value.into_iter().map(|v| v.expect("every state solved")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Sense {
    Max,
    Min,
}

impl Sense {
    pub(crate) fn improves(self, candidate: &Rational, incumbent: &Rational) -> bool {
        match self {
            Sense::Max => candidate > incumbent,
            Sense::Min => candidate < incumbent,
        }
    }
}

/// One option at a state: its reward and successor.
#[derive(Debug, Clone)]
pub(crate) struct Arc {
    pub reward: Rational,
    pub target: usize,
}

/// Policy iteration for `x[s] = opt_{arc at s} beta * (arc.reward + x[arc.target])`.
///
/// `arcs[s]` lists the options at `s` in tie-breaking order; `init[s]`
/// indexes the starting option. Returns the optimal values and the
/// selected option index per state. A state switches only on strict
/// improvement; among strictly improving options the first best wins.
pub(crate) fn policy_iteration(
    arcs: &[Vec<Arc>],
    beta: &Rational,
    sense: Sense,
    init: Vec<usize>,
) -> (Vec<Rational>, Vec<usize>) {
    let n = arcs.len();
    let mut pick = init;
    loop {
        let succ: Vec<usize> = (0..n).map(|s| arcs[s][pick[s]].target).collect();
        let reward: Vec<Rational> = (0..n).map(|s| arcs[s][pick[s]].reward.clone()).collect();
        let x = evaluate_selector(&succ, &reward, beta);
        let mut changed = false;
        for s in 0..n {
            let q = |i: usize| beta * &(&arcs[s][i].reward + &x[arcs[s][i].target]);
            let mut best = pick[s];
            let mut best_q = q(best);
            for i in 0..arcs[s].len() {
                let qi = q(i);
                if sense.improves(&qi, &best_q) {
                    best = i;
                    best_q = qi;
                }
            }
            if best != pick[s] {
                pick[s] = best;
                changed = true;
            }
        }
        if !changed {
            return (x, pick);
        }
    }
}

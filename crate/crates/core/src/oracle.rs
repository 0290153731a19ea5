//! Brute-force ground truth on the exact-wealth tree.
//!
//! Everything here works on exact wealth without any rounding, and is
//! exponential in the horizon. It exists to check the solvers on small
//! instances.

use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::bounds::BoundsTable;
use crate::error::{Error, Result};
use crate::model::{ActionId, Configuration, SolvencyMdp, StateId};
use crate::par::{map_range, Exec};
use crate::qualitative::ObliviousStrategy;
use crate::rational::Rational;
use crate::reach::{Cursor, LayeredStrategy};

pub const HORIZON_CAP: usize = 14;

#[derive(Debug, Clone)]
pub struct CoverQuery {
    pub start: Configuration,
    /// Wealth within `slack` of `U(t)` counts as covered.
    pub slack: Rational,
    pub horizon: usize,
}

fn check_cap(horizon: usize) -> Result<()> {
    if horizon > HORIZON_CAP {
        return Err(Error::HorizonCap {
            horizon,
            cap: HORIZON_CAP,
        });
    }
    Ok(())
}

/// Optimal probability of reaching `(t, y)` with `y >= U(t) - slack` within
/// `horizon` steps.
pub fn cover_probability(m: &SolvencyMdp, bounds: &BoundsTable, q: &CoverQuery) -> Result<Rational> {
    check_cap(q.horizon)?;
    let mut memo = HashMap::new();
    Ok(cover(m, bounds, q, q.start.state, &q.start.wealth, 0, &mut memo))
}

fn cover(
    m: &SolvencyMdp,
    bounds: &BoundsTable,
    q: &CoverQuery,
    s: StateId,
    x: &Rational,
    depth: usize,
    memo: &mut HashMap<(StateId, Rational, usize), Rational>,
) -> Rational {
    if *x >= &bounds.upper[s] - &q.slack {
        return Rational::one();
    }
    if depth == q.horizon {
        return Rational::zero();
    }
    let key = (s, x.clone(), depth);
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let mut best = Rational::zero();
    for c in m.choices(s) {
        let next = m.next_wealth(x, &c.gain);
        let mut acc = Rational::zero();
        for (t, p) in &c.dist {
            acc += p * &cover(m, bounds, q, *t, &next, depth + 1, memo);
        }
        best = best.max(acc);
    }
    memo.insert(key, best.clone());
    best
}

/// Probability that `sigma`, executed from `start`, reaches a configuration
/// within `slack` of rentier in at most `horizon` steps.
pub fn strategy_win_probability(
    m: &SolvencyMdp,
    bounds: &BoundsTable,
    sigma: &LayeredStrategy,
    start: &Configuration,
    slack: &Rational,
    horizon: usize,
) -> Result<Rational> {
    check_cap(horizon)?;
    if start.state != sigma.root.state {
        return Err(Error::InvalidArgument(format!(
            "strategy starts in state {} but execution starts in {}",
            sigma.root.state, start.state
        )));
    }
    let mut memo = HashMap::new();
    follow(
        m,
        bounds,
        sigma,
        &sigma.start(),
        &start.wealth,
        slack,
        horizon,
        &mut memo,
    )
}

#[allow(clippy::too_many_arguments)]
fn follow(
    m: &SolvencyMdp,
    bounds: &BoundsTable,
    sigma: &LayeredStrategy,
    cur: &Cursor,
    x: &Rational,
    slack: &Rational,
    horizon: usize,
    memo: &mut HashMap<(Cursor, Rational), Rational>,
) -> Result<Rational> {
    if *x >= &bounds.upper[cur.state] - slack {
        return Ok(Rational::one());
    }
    if cur.layer == horizon {
        return Ok(Rational::zero());
    }
    let key = (cur.clone(), x.clone());
    if let Some(v) = memo.get(&key) {
        return Ok(v.clone());
    }
    let a = sigma.action(m, cur)?;
    let c = m.choice(cur.state, a).expect("strategy plays enabled actions");
    let next = m.next_wealth(x, &c.gain);
    let mut acc = Rational::zero();
    for (t, p) in &c.dist {
        let child = sigma.advance(m, bounds, cur, a, *t);
        acc += p * &follow(m, bounds, sigma, &child, &next, slack, horizon, memo)?;
    }
    memo.insert(key, acc.clone());
    Ok(acc)
}

/// Worst case over realisable runs of the `k`-step discounted reward of an
/// oblivious strategy, widened by the largest possible tail.
pub fn worst_case_discounted(m: &SolvencyMdp, sigma: &ObliviousStrategy, s: StateId, k: usize) -> (Rational, Rational) {
    let beta = m.beta();
    let mut w = vec![Rational::zero(); m.num_states()];
    for _ in 0..k {
        w = m
            .states()
            .map(|u| {
                let c = m.choice(u, sigma.action(u)).expect("enabled action");
                let worst = c
                    .dist
                    .iter()
                    .map(|(t, _)| w[*t].clone())
                    .reduce(Rational::min)
                    .expect("nonempty support");
                &beta * &(&c.gain + &worst)
            })
            .collect();
    }
    let tail = discount_tail(m, k);
    (&w[s] - &tail, &w[s] + &tail)
}

/// `max |F| * beta^(k+1) / (1 - beta)`.
pub fn discount_tail(m: &SolvencyMdp, k: usize) -> Rational {
    let beta = m.beta();
    m.max_abs_gain() * beta.pow(k as i64 + 1) / (Rational::one() - &beta)
}

#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    Layered(&'a LayeredStrategy),
    Oblivious(&'a ObliviousStrategy),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOutcome {
    pub hits: u64,
    pub trials: u64,
}

impl SimOutcome {
    pub fn frequency(&self) -> f64 {
        self.hits as f64 / self.trials as f64
    }
}

/// Sample the successor with exact cumulative thresholds against one
/// 64-bit draw.
fn sample(dist: &[(StateId, Rational)], draw: u64) -> StateId {
    let mut cum = Rational::zero();
    for (t, p) in dist {
        cum += p;
        if cum.exceeds_draw(draw) {
            return *t;
        }
    }
    dist.last().expect("nonempty support").0
}

/// Monte-Carlo frequency of reaching a rentier configuration within
/// `steps` steps. Trial `i` draws from ChaCha8 seeded with `seed` on stream
/// `i`, so the outcome does not depend on the execution mode.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    m: &SolvencyMdp,
    bounds: &BoundsTable,
    policy: Policy<'_>,
    start: &Configuration,
    steps: usize,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> Result<SimOutcome> {
    if steps == 0 || trials == 0 {
        return Err(Error::InvalidArgument("steps and trials must be at least 1".into()));
    }
    let outcomes = map_range(exec, trials as usize, |i| -> Result<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut s = start.state;
        let mut x = start.wealth.clone();
        let mut cur = match policy {
            Policy::Layered(sigma) => Some(sigma.start()),
            Policy::Oblivious(_) => None,
        };
        for _ in 0..steps {
            if x >= bounds.upper[s] {
                return Ok(true);
            }
            let a: ActionId = match (policy, &cur) {
                (Policy::Layered(sigma), Some(c)) => sigma.action(m, c)?,
                (Policy::Oblivious(sigma), _) => sigma.action(s),
                _ => unreachable!("layered policy carries a cursor"),
            };
            let c = m.choice(s, a).expect("enabled action");
            let t = sample(&c.dist, rng.next_u64());
            x = m.next_wealth(&x, &c.gain);
            if let (Policy::Layered(sigma), Some(cu)) = (policy, &cur) {
                cur = Some(sigma.advance(m, bounds, cu, a, t));
            }
            s = t;
        }
        Ok(x >= bounds.upper[s])
    });
    let mut hits = 0;
    for o in outcomes {
        hits += o? as u64;
    }
    Ok(SimOutcome { hits, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{value_approx, ApproxOptions};
    use crate::bounds::compute_bounds;
    use crate::model::fixtures::example22;
    use crate::model::ModelBuilder;
    use crate::qualitative::solve_qualitative;
    use crate::rational::rat;
    use crate::reach::Prob;

    fn query(x: Rational, slack: Rational, n: usize) -> CoverQuery {
        CoverQuery {
            start: Configuration::new(0, x),
            slack,
            horizon: n,
        }
    }

    #[test]
    fn example22_cover_from_minus_two() {
        let m = example22();
        let b = compute_bounds(&m);
        for n in [1, 4, 10] {
            assert_eq!(
                cover_probability(&m, &b, &query(rat(-2, 1), rat(0, 1), n)).unwrap(),
                rat(1, 10)
            );
        }
        assert_eq!(
            cover_probability(&m, &b, &query(rat(7, 1), rat(0, 1), 3)).unwrap(),
            rat(1, 1)
        );
        // -3/2 doubles away from the fixed point -2 under work
        assert_eq!(
            cover_probability(&m, &b, &query(rat(-3, 2), rat(0, 1), 8)).unwrap(),
            rat(1, 1)
        );
        assert!(cover_probability(&m, &b, &query(rat(0, 1), rat(0, 1), 15)).is_err());
    }

    #[test]
    fn cover_is_monotone() {
        let m = example22();
        let b = compute_bounds(&m);
        let mut prev = rat(0, 1);
        for z in 0..6 {
            let v = cover_probability(&m, &b, &query(rat(-9, 1), rat(z, 1), 4)).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        let mut prev = rat(0, 1);
        for n in 1..8 {
            let v = cover_probability(&m, &b, &query(rat(-5, 2), rat(0, 1), n)).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn lifted_strategy_guarantees() {
        let m = example22();
        let b = compute_bounds(&m);
        let r = value_approx(&m, &b, 0, &rat(-10, 1), &rat(1, 2), &ApproxOptions::default()).unwrap();
        let params = r.params.clone().unwrap();
        let v = r.v.exact().unwrap().clone();
        let slack = params.rounding_loss(m.rho());
        let from = Configuration::new(0, rat(-19, 2));
        let p = strategy_win_probability(&m, &b, &r.strategy, &from, &slack, params.horizon).unwrap();
        assert!(p >= v);
        let shifted = Configuration::new(0, rat(-19, 2) + rat(1, 4));
        let p = strategy_win_probability(&m, &b, &r.strategy, &shifted, &rat(0, 1), params.horizon).unwrap();
        assert!(p >= v);
    }

    #[test]
    fn worst_case_work_strategy() {
        let m = example22();
        let q = solve_qualitative(&m);
        let (lo, hi) = worst_case_discounted(&m, &q.strategy, 0, 30);
        assert!(lo <= rat(2, 1) && rat(2, 1) <= hi);
        assert_eq!(&hi - &lo, rat(2, 1) * discount_tail(&m, 30));

        let mut bld = ModelBuilder::new();
        bld.state("a").action("a", "z", rat(0, 1), [("a", rat(1, 1))]);
        let z = bld.build_solvency(rat(2, 1)).unwrap();
        let (lo, hi) = worst_case_discounted(&z, &ObliviousStrategy { choice: vec![0] }, 0, 5);
        assert_eq!((lo, hi), (rat(0, 1), rat(0, 1)));
    }

    #[test]
    fn simulate_is_reproducible() {
        let m = example22();
        let b = compute_bounds(&m);
        let r = value_approx(&m, &b, 0, &rat(-10, 1), &rat(1, 2), &ApproxOptions::default()).unwrap();
        assert_eq!(r.v, Prob::Exact(rat(1, 10)));
        let start = r.strategy.origin.clone();
        let run = |exec| simulate(&m, &b, Policy::Layered(&r.strategy), &start, 12, 10_000, 7, exec).unwrap();
        let a = run(Exec::Parallel);
        assert_eq!(a, run(Exec::Sequential));
        // within 3 standard deviations of 1/10
        let sd = (0.1f64 * 0.9 / 10_000.0).sqrt();
        assert!((a.frequency() - 0.1).abs() <= 3.0 * sd, "{}", a.frequency());

        let win = Configuration::new(0, rat(7, 1));
        let q = solve_qualitative(&m);
        let o = simulate(&m, &b, Policy::Oblivious(&q.strategy), &win, 3, 100, 1, Exec::default()).unwrap();
        assert_eq!(o.hits, 100);
    }
}

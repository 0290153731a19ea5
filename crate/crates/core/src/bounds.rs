//! Safe and doomed wealth bounds.
//!
//! `U(s)` is the least wealth from which every strategy wins surely and
//! `L(s)` the greatest from which every strategy loses. They are the
//! fixed points
//!
//! ```text
//! U(s) = max_{a, t in Succ(s,a)} (U(t) - F(s,a)) / rho
//! L(s) = min_{a, t in Succ(s,a)} (L(t) - F(s,a)) / rho
//! ```
//!
//! solved exactly by policy iteration over (action, successor) selectors.

use serde::Serialize;

use crate::fixpoint::{policy_iteration, Arc, Sense};
use crate::model::{Configuration, SolvencyMdp, StateId};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundsTable {
    pub lower: Vec<Rational>,
    pub upper: Vec<Rational>,
    pub global_lower: Rational,
    pub global_upper: Rational,
}

impl BoundsTable {
    pub fn lower(&self, s: StateId) -> &Rational {
        &self.lower[s]
    }

    pub fn upper(&self, s: StateId) -> &Rational {
        &self.upper[s]
    }

    /// `U(M) - L(M)`.
    pub fn spread(&self) -> Rational {
        &self.global_upper - &self.global_lower
    }
}

/// Options at `s` flattened to (action, successor) pairs in declaration
/// order, with reward `-F(s,a)`.
fn pair_arcs(m: &SolvencyMdp) -> Vec<Vec<Arc>> {
    m.states()
        .map(|s| {
            m.choices(s)
                .iter()
                .flat_map(|c| {
                    c.dist.iter().map(move |(t, _)| Arc {
                        reward: -&c.gain,
                        target: *t,
                    })
                })
                .collect()
        })
        .collect()
}

pub fn compute_bounds(m: &SolvencyMdp) -> BoundsTable {
    let arcs = pair_arcs(m);
    let beta = m.beta();
    let init = vec![0; m.num_states()];
    let (upper, _) = policy_iteration(&arcs, &beta, Sense::Max, init.clone());
    let (lower, _) = policy_iteration(&arcs, &beta, Sense::Min, init);
    let global_lower = lower.iter().cloned().reduce(Rational::min).expect("nonempty");
    let global_upper = upper.iter().cloned().reduce(Rational::max).expect("nonempty");
    BoundsTable {
        lower,
        upper,
        global_lower,
        global_upper,
    }
}

/// `(s, x)` with `x >= U(s)`.
pub fn is_rentier(bounds: &BoundsTable, c: &Configuration) -> bool {
    c.wealth >= bounds.upper[c.state]
}

/// `max |F| / (rho - 1)`, the trivial a-priori bound on `|U|` and `|L|`.
pub fn trivial_bound(m: &SolvencyMdp) -> Rational {
    m.max_abs_gain() / (m.rho() - Rational::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::example22;
    use crate::model::ModelBuilder;
    use crate::rational::rat;

    /// Residual of the optimality equation; must be exactly zero.
    fn residuals(m: &SolvencyMdp, b: &BoundsTable) {
        let beta = m.beta();
        for s in m.states() {
            let vals = |v: &Vec<Rational>| -> Vec<Rational> {
                m.choices(s)
                    .iter()
                    .flat_map(|c| {
                        c.dist
                            .iter()
                            .map(|(t, _)| &beta * &(&v[*t] - &c.gain))
                            .collect::<Vec<_>>()
                    })
                    .collect()
            };
            let up = vals(&b.upper).into_iter().reduce(Rational::max).unwrap();
            let lo = vals(&b.lower).into_iter().reduce(Rational::min).unwrap();
            assert_eq!(up, b.upper[s]);
            assert_eq!(lo, b.lower[s]);
        }
    }

    #[test]
    fn example22_bounds() {
        let m = example22();
        let b = compute_bounds(&m);
        assert_eq!(b.upper, vec![rat(20, 3), rat(-80, 3), rat(10, 3)]);
        assert_eq!(b.lower, vec![rat(-40, 3), rat(-110, 3), rat(-20, 3)]);
        assert_eq!(b.global_upper, rat(20, 3));
        assert_eq!(b.global_lower, rat(-110, 3));
        residuals(&m, &b);
    }

    #[test]
    fn single_state_fixed_point() {
        for (g, rho) in [
            (rat(0, 1), rat(3, 2)),
            (rat(5, 1), rat(2, 1)),
            (rat(-7, 3), rat(11, 10)),
        ] {
            let mut bld = ModelBuilder::new();
            bld.state("s").action("s", "a", g.clone(), [("s", rat(1, 1))]);
            let m = bld.build_solvency(rho.clone()).unwrap();
            let b = compute_bounds(&m);
            let expect = &g / &(Rational::one() - &rho);
            assert_eq!(b.upper[0], expect);
            assert_eq!(b.lower[0], expect);
        }
    }

    #[test]
    fn rentier_boundary() {
        let m = example22();
        let b = compute_bounds(&m);
        assert!(is_rentier(&b, &Configuration::new(0, rat(20, 3))));
        assert!(!is_rentier(&b, &Configuration::new(0, rat(20, 3) - rat(1, 1000))));
        assert!(is_rentier(&b, &Configuration::new(2, rat(10, 3))));
    }

    #[test]
    fn within_trivial_bound() {
        let m = example22();
        let b = compute_bounds(&m);
        let k = trivial_bound(&m);
        for s in m.states() {
            assert!(-&k <= b.lower[s] && b.lower[s] <= b.upper[s] && b.upper[s] <= k);
        }
    }
}

mod common;

use common::Gen;
use proptest::prelude::*;
use solvency::knapsack::{gen_gadget, Gadget, Variant};
use solvency::{rat, Rational};

/// Probability of reaching `s_{n+1}` when every item is packed (`plus`)
/// or every item is left (`!plus`).
fn reach_last(g: &Gadget, plus: bool) -> Rational {
    let m = &g.mdp;
    let n = g.instance.items.len();
    let mut mass = Rational::one();
    for i in 1..=n {
        let side = m.state_id(&format!("s{i}{}", if plus { '+' } else { '-' })).unwrap();
        let next = m.state_id(&format!("s{}", i + 1)).unwrap();
        let c = &m.choices(side)[0];
        let (_, p) = c.dist.iter().find(|(t, _)| *t == next).unwrap();
        mass *= p;
    }
    mass
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gadget_distributions_and_survival(seed in any::<u64>(), normalized in any::<bool>()) {
        let k = Gen::new(seed).knapsack(6, 8);
        let variant = if normalized { Variant::Normalized } else { Variant::Weights };
        let Ok(g) = gen_gadget(&k, variant) else { return Ok(()) };
        let m = &g.mdp;
        for s in m.states() {
            for c in m.choices(s) {
                let total: Rational = c.dist.iter().map(|(_, p)| p.clone()).sum();
                prop_assert_eq!(total, Rational::one());
                prop_assert!(c.dist.iter().all(|(_, p)| p.is_positive()));
            }
        }
        let n = k.items.len() as i64;
        let expected = Rational::one() - rat(1, n);
        prop_assert_eq!(reach_last(&g, true), expected.clone());
        prop_assert_eq!(reach_last(&g, false), expected);
        prop_assert_eq!(m.rho(), &(Rational::one() + rat(1, 4 * n * n)));
        prop_assert!(g.p <= Rational::one());
    }
}

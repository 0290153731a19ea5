//! Knapsack instances encoded as solvency MDPs.
//!
//! Item `i` is offered at state `s_i`: `a_i+` packs it, `a_i-` leaves it.
//! Packing risks a jump to the winning sink `t1` with probability tied to
//! `v_i`; leaving it pays `w_i` (discounted so that all weights arrive
//! undiscounted at `s_{n+1}`). At `s_{n+1}` the run wins iff the wealth
//! left behind covers `w_tot - W`. The instance is solvable iff
//! `WR(s_1, p) <= 0`, and otherwise `WR(s_1, p) >= 1/4`.

use serde::{Deserialize, Serialize};

use crate::approx::{approx_wr, ApproxOptions, WrApproxResult};
use crate::error::{Error, Result};
use crate::model::{ModelBuilder, SolvencyMdp, StateId};
use crate::rational::Rational;
use crate::reach::ReachMode;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Item {
    pub w: u64,
    pub v: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnapsackInstance {
    pub items: Vec<Item>,
    #[serde(rename = "W")]
    pub weight_bound: u64,
    #[serde(rename = "V")]
    pub value_bound: Rational,
}

/// Which gain function to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// Gains carry the item weights as they are.
    #[default]
    Weights,
    /// Gains divided by the total weight, so `max |F|` is polynomial in `n`.
    Normalized,
}

#[derive(Debug, Clone)]
pub struct Gadget {
    pub mdp: SolvencyMdp,
    pub start: StateId,
    pub p: Rational,
    /// The instance after value rescaling.
    pub instance: KnapsackInstance,
    pub variant: Variant,
}

impl KnapsackInstance {
    pub fn parse(text: &str) -> Result<Self> {
        let k: KnapsackInstance = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.items.len() < 2 {
            return Err(Error::InvalidArgument(
                "a knapsack instance needs at least two items".into(),
            ));
        }
        for (i, it) in self.items.iter().enumerate() {
            if it.w == 0 || !it.v.is_positive() {
                return Err(Error::InvalidArgument(format!(
                    "item {} must have positive weight and value",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn total_weight(&self) -> u64 {
        self.items.iter().map(|i| i.w).sum()
    }

    pub fn total_value(&self) -> Rational {
        self.items.iter().map(|i| i.v.clone()).sum()
    }

    /// Exhaustive check over all subsets.
    pub fn brute_force(&self) -> bool {
        let n = self.items.len();
        (0u64..1 << n).any(|mask| {
            let picked = || self.items.iter().enumerate().filter(move |(i, _)| mask >> i & 1 == 1);
            let w: u64 = picked().map(|(_, it)| it.w).sum();
            let v: Rational = picked().map(|(_, it)| it.v.clone()).sum();
            w <= self.weight_bound && v >= self.value_bound
        })
    }

    /// Values and `V` scaled so that the total value is at most `1/n^2`.
    fn rescaled(&self) -> KnapsackInstance {
        let n = Rational::from_integer(self.items.len() as u64);
        let alpha = (&n * &n).recip();
        let total = self.total_value();
        if total < alpha {
            return self.clone();
        }
        let factor = total * &n * &n;
        KnapsackInstance {
            items: self
                .items
                .iter()
                .map(|it| Item {
                    w: it.w,
                    v: &it.v / &factor,
                })
                .collect(),
            weight_bound: self.weight_bound,
            value_bound: &self.value_bound / &factor,
        }
    }
}

pub fn gen_gadget(k: &KnapsackInstance, variant: Variant) -> Result<Gadget> {
    k.validate()?;
    let k = k.rescaled();
    let n = k.items.len();
    let nr = Rational::from_integer(n as u64);
    let one = Rational::one();
    let alpha = (&nr * &nr).recip();
    let p = &one + &k.value_bound - nr.recip();
    if p > one {
        return Err(Error::Unsolvable(p));
    }
    let rho = &one + &(Rational::from_integer(4) * &nr * &nr).recip();
    assert!(rho.pow(2 * n as i64) / Rational::from_integer(4) <= Rational::new(1, 2));

    let w_tot = Rational::from_integer(k.total_weight());
    let w_bound = Rational::from_integer(k.weight_bound);
    let scale = match variant {
        Variant::Weights => one.clone(),
        Variant::Normalized => w_tot.recip(),
    };
    let sink_loss = match variant {
        Variant::Weights => -(Rational::from_integer(2) * (&w_tot + &one)),
        Variant::Normalized => Rational::from_integer(-2),
    };
    let final_gain = -(&(&w_tot - &w_bound) * &scale) / (Rational::from_integer(4) * &nr * &nr);

    let s = |i: usize| format!("s{i}");
    let mut b = ModelBuilder::new();
    for i in 1..=n {
        b.state(s(i)).state(format!("s{i}+")).state(format!("s{i}-"));
    }
    b.state(s(n + 1)).state("t1").state("t2").state("t3");
    let zero = Rational::zero();
    for (idx, it) in k.items.iter().enumerate() {
        let i = idx + 1;
        b.action(s(i), format!("a{i}+"), zero.clone(), [(format!("s{i}+"), one.clone())]);
        b.action(s(i), format!("a{i}-"), zero.clone(), [(format!("s{i}-"), one.clone())]);
        let remaining = &one - &(Rational::from_integer(idx as u64) * &alpha);
        let cont = &one - &(&alpha / &remaining);
        let mut plus = vec![("t1".to_string(), &it.v / &remaining)];
        let lose = &(&alpha - &it.v) / &remaining;
        if lose.is_positive() {
            plus.push(("t2".to_string(), lose));
        }
        plus.push((s(i + 1), cont.clone()));
        b.action(format!("s{i}+"), "b", zero.clone(), plus);
        let gain = Rational::from_integer(it.w) * rho.pow(-2 * (n - i) as i64) * &scale;
        b.action(
            format!("s{i}-"),
            "b",
            gain,
            [("t3".to_string(), &alpha / &remaining), (s(i + 1), cont)],
        );
    }
    b.action(s(n + 1), "b", final_gain, [(s(n + 1), one.clone())]);
    b.action("t1", "b", one.clone(), [("t1", one.clone())]);
    b.action("t2", "b", sink_loss.clone(), [("t2", one.clone())]);
    b.action("t3", "b", sink_loss, [("t3", one.clone())]);
    let mdp = b.build_solvency(rho)?;
    let start = mdp.state_id("s1")?;
    Ok(Gadget {
        mdp,
        start,
        p,
        instance: k,
        variant,
    })
}

/// Approximate `WR(s_1, p)` on the gadget to within half the decision gap.
pub fn solve_gadget(g: &Gadget, opts: &ApproxOptions) -> Result<WrApproxResult> {
    let delta = &decision_gap(&g.instance, g.variant) / &Rational::from_integer(2);
    let opts = ApproxOptions {
        mode: ReachMode::Exact,
        ..*opts
    };
    approx_wr(&g.mdp, g.start, &g.p, &delta, &opts)
}

/// Initial wealths in `[0, gap]` win with probability `p` iff the instance
/// is solvable.
pub fn decision_gap(k: &KnapsackInstance, variant: Variant) -> Rational {
    match variant {
        Variant::Weights => Rational::new(1, 4),
        Variant::Normalized => Rational::new(1, 4 * k.total_weight()),
    }
}

/// Decide the instance by approximating `WR(s_1, p)` to within half the
/// gap between solvable (`WR <= 0`) and unsolvable (`WR >= 1/4`, scaled by
/// `1 / w_tot` for the normalized gains).
pub fn decide_via_solver(k: &KnapsackInstance, variant: Variant, opts: &ApproxOptions) -> Result<bool> {
    let g = match gen_gadget(k, variant) {
        Ok(g) => g,
        Err(Error::Unsolvable(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    let r = solve_gadget(&g, opts)?;
    Ok(r.b < decision_gap(k, variant))
}

//! Value approximation and bisection for `WR(s,p)`.
//!
//! `value_approx` builds the unfolded MDP from `x0 + eps/2` with a horizon
//! long enough for a good strategy to reach a rentier configuration and a
//! grid fine enough that rounding loses at most `eps/2`. The resulting `v`
//! satisfies `Val(s0, x0) <= v`, and the lifted strategy wins with
//! probability at least `v` from `x0 + eps`.
//!
//! `approx_wr` bisects on wealth using those two guarantees.

use num_bigint::BigInt;
use serde::Serialize;

use crate::bounds::{compute_bounds, BoundsTable};
use crate::error::{Error, Result};
use crate::model::{Configuration, DiscountedMdp, SolvencyMdp, StateId};
use crate::par::Exec;
use crate::rational::Rational;
use crate::reach::{lift_strategy, max_hit_probability, LayeredStrategy, Prob, ReachMode};
use crate::unfold::{build_unfolded, classify, ClassKind, DEFAULT_NODE_CAP};

/// Half-width of the band around `p` inside which a float `v` is not
/// trusted to decide the branch.
pub const FLOAT_GUARD: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApproxParams {
    pub epsilon: Rational,
    pub horizon: usize,
    pub grid: Rational,
    pub short_circuit: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct ApproxOptions {
    pub node_cap: usize,
    pub mode: ReachMode,
    /// Stop once `(b - a) / 4 <= delta` instead of `b - a <= delta`.
    pub legacy_guard: bool,
    /// Move the lower end on `v <= p` instead of `v < p`.
    pub literal_branch: bool,
    pub exec: Exec,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions {
            node_cap: DEFAULT_NODE_CAP,
            mode: ReachMode::Auto,
            legacy_guard: false,
            literal_branch: false,
            exec: Exec::default(),
        }
    }
}

/// Least `k >= 1` with `base^k >= target`, for `base > 1`.
fn least_power_at_least(base: &Rational, target: &Rational) -> usize {
    if base >= target {
        return 1;
    }
    let mut hi = 2usize;
    while &base.pow(hi as i64) < target {
        hi *= 2;
    }
    let mut lo = hi / 2; // base^lo < target
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if &base.pow(mid as i64) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

pub fn compute_params(m: &SolvencyMdp, bounds: &BoundsTable, eps: &Rational) -> Result<ApproxParams> {
    if !eps.is_positive() {
        return Err(Error::InvalidArgument(format!("epsilon {eps} must be positive")));
    }
    let d = bounds.spread();
    if d.is_zero() {
        return Err(Error::Degenerate(bounds.global_upper.clone()));
    }
    let rho = m.rho();
    let target = Rational::from_integer(4) * &d / eps;
    let n = least_power_at_least(rho, &target);
    let rho_n = rho.pow(n as i64);
    let nr = Rational::from_integer(n as u64);
    let eps3 = eps.pow(3);
    let cubic = (Rational::from_integer(64) * &nr * &d * &d / eps3).ceil_int();
    // only binds when n = 1, where rho^n alone may outgrow the cubic term
    let shift = (Rational::from_integer(2) * &nr * &rho_n / eps).ceil_int();
    let denom: BigInt = cubic.max(shift).max(BigInt::from(1));
    let grid = Rational::new(1, denom);
    let params = ApproxParams {
        epsilon: eps.clone(),
        horizon: n,
        grid,
        short_circuit: rho >= &target,
    };
    assert!(params.rounding_loss(rho) <= eps / &Rational::from_integer(2));
    Ok(params)
}

impl ApproxParams {
    /// `n * λ * rho^n`, the most rounding can add to wealth in `n` steps.
    pub fn rounding_loss(&self, rho: &Rational) -> Rational {
        Rational::from_integer(self.horizon as u64) * &self.grid * rho.pow(self.horizon as i64)
    }
}

#[derive(Debug, Clone)]
pub struct ValueApproxResult {
    pub v: Prob,
    /// Built from `x0 + eps/2`, meant to be executed from `x0 + eps`.
    pub strategy: LayeredStrategy,
    /// `None` when `U(M) = L(M)`.
    pub params: Option<ApproxParams>,
    pub exact: bool,
    pub nodes: usize,
}

pub fn value_approx(
    m: &SolvencyMdp,
    bounds: &BoundsTable,
    s0: StateId,
    x0: &Rational,
    eps: &Rational,
    opts: &ApproxOptions,
) -> Result<ValueApproxResult> {
    if !eps.is_positive() {
        return Err(Error::InvalidArgument(format!("epsilon {eps} must be positive")));
    }
    let half = eps / &Rational::from_integer(2);
    let y = x0 + &half;
    let origin = Configuration::new(s0, x0 + eps);
    let built_from = Configuration::new(s0, y.clone());

    if bounds.spread().is_zero() {
        let root = classify(bounds, &Rational::one(), &built_from);
        let win = y >= bounds.upper[s0];
        return Ok(ValueApproxResult {
            v: if win { Prob::one(true) } else { Prob::zero(true) },
            strategy: LayeredStrategy::trivial(origin, root, Rational::one(), 1),
            params: None,
            exact: true,
            nodes: 1,
        });
    }

    let params = compute_params(m, bounds, eps)?;
    if params.short_circuit {
        return Ok(one_step(m, bounds, params, built_from, origin));
    }
    let u = build_unfolded(m, bounds, &params.grid, params.horizon, &built_from, opts.node_cap)?;
    let r = max_hit_probability(&u, opts.mode, opts.exec);
    let strategy = lift_strategy(&r, &u, origin);
    Ok(ValueApproxResult {
        v: r.value,
        strategy,
        params: Some(params),
        exact: r.exact,
        nodes: u.len(),
    })
}

/// The single action maximising the probability of stepping into a
/// rentier configuration from `from`.
fn one_step(
    m: &SolvencyMdp,
    bounds: &BoundsTable,
    params: ApproxParams,
    from: Configuration,
    origin: Configuration,
) -> ValueApproxResult {
    let root = classify(bounds, &params.grid, &from);
    let mut strategy = LayeredStrategy::trivial(origin, root.clone(), params.grid.clone(), 1);
    let v = match root.kind {
        ClassKind::Win => Rational::one(),
        ClassKind::Lose => Rational::zero(),
        ClassKind::Interval(_) => {
            let mut best: Option<(Rational, usize)> = None;
            for c in m.choices(from.state) {
                let next = m.next_wealth(&from.wealth, &c.gain);
                let q: Rational = c
                    .dist
                    .iter()
                    .filter(|(t, _)| next >= bounds.upper[*t])
                    .map(|(_, p)| p.clone())
                    .sum();
                if best.as_ref().is_none_or(|(b, _)| &q > b) {
                    best = Some((q, c.action));
                }
            }
            let (q, a) = best.expect("enabled action");
            strategy.choices.insert((0, root), a);
            q
        }
    };
    ValueApproxResult {
        v: Prob::Exact(v),
        strategy,
        params: Some(params),
        exact: true,
        nodes: 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `v < p`: `WR >= y`, so the lower end moves up to `y`.
    Raise,
    /// `v >= p`: `WR <= y + eps`, so the upper end moves down.
    Lower,
}

#[derive(Debug, Clone, Serialize)]
pub struct Iteration {
    pub a: Rational,
    pub b: Rational,
    pub epsilon: Rational,
    pub y: Rational,
    pub v: String,
    pub branch: Branch,
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub struct WrApproxResult {
    pub a: Rational,
    pub b: Rational,
    /// The last iteration's strategy; `None` when no iteration ran.
    pub strategy: Option<LayeredStrategy>,
    pub iterations: usize,
    pub certified: bool,
    pub trace: Vec<Iteration>,
}

fn decide(v: &Prob, p: &Rational, literal: bool) -> (Branch, bool) {
    match v {
        Prob::Exact(v) => {
            let raise = if literal { v <= p } else { v < p };
            (if raise { Branch::Raise } else { Branch::Lower }, true)
        }
        Prob::Float(v) => {
            let p = p.to_f64();
            if *v < p - FLOAT_GUARD {
                (Branch::Raise, true)
            } else {
                (Branch::Lower, *v > p + FLOAT_GUARD)
            }
        }
    }
}

pub fn approx_wr(
    m: &SolvencyMdp,
    s: StateId,
    p: &Rational,
    delta: &Rational,
    opts: &ApproxOptions,
) -> Result<WrApproxResult> {
    if p.is_negative() || p > &Rational::one() {
        return Err(Error::InvalidArgument(format!("probability {p} outside [0,1]")));
    }
    if !delta.is_positive() {
        return Err(Error::InvalidArgument(format!("delta {delta} must be positive")));
    }
    if p.is_zero() {
        return Err(Error::ZeroProbability);
    }
    if s >= m.num_states() {
        return Err(Error::UnknownState(s.to_string()));
    }
    let bounds = compute_bounds(m);
    let mut a = bounds.lower[s].clone();
    let mut b = bounds.upper[s].clone();
    let four = Rational::from_integer(4);
    let two = Rational::from_integer(2);
    let done = |a: &Rational, b: &Rational| {
        let w = b - a;
        if opts.legacy_guard {
            &w / &four <= *delta
        } else {
            &w <= delta
        }
    };
    let mut result = WrApproxResult {
        a: a.clone(),
        b: b.clone(),
        strategy: None,
        iterations: 0,
        certified: true,
        trace: Vec::new(),
    };
    if delta >= &(&b - &a) {
        return Ok(result);
    }
    while !done(&a, &b) {
        let w = &b - &a;
        let eps = &w / &four;
        let y = &a + &(&w / &two);
        let r = value_approx(m, &bounds, s, &y, &eps, opts)?;
        let (branch, sure) = decide(&r.v, p, opts.literal_branch);
        result.certified &= r.exact && sure;
        result.trace.push(Iteration {
            a: a.clone(),
            b: b.clone(),
            epsilon: eps.clone(),
            y: y.clone(),
            v: r.v.to_string(),
            branch,
            nodes: r.nodes,
        });
        match branch {
            Branch::Raise => a = y,
            Branch::Lower => b = &a + &(Rational::from_integer(3) * &eps),
        }
        result.iterations += 1;
        result.strategy = Some(r.strategy);
    }
    result.a = a;
    result.b = b;
    Ok(result)
}

/// Value-at-risk of a discounted MDP: the threshold `t` such that the
/// discounted reward clears `t` with probability `p`, within `delta`.
pub fn var_approx(
    d: &DiscountedMdp,
    s: StateId,
    p: &Rational,
    delta: &Rational,
    opts: &ApproxOptions,
) -> Result<Rational> {
    Ok(-approx_wr(&d.to_solvency(), s, p, delta, opts)?.a)
}

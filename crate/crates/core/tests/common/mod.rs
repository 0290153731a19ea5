//! Seeded random instances shared by the integration tests.
#![allow(dead_code)]

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use solvency::bounds::compute_bounds;
use solvency::knapsack::{Item, KnapsackInstance};
use solvency::{rat, ModelBuilder, Rational, SolvencyMdp};

/// Prime that no generated gain, probability or rate mentions. Starting
/// wealths carry it in their denominator, so exact wealths never land on a
/// bound.
pub const ODD: i64 = 1009;

pub struct Gen(ChaCha8Rng);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.0.next_u64() % n
    }

    pub fn range(&mut self, lo: i64, hi: i64) -> i64 {
        lo + self.below((hi - lo + 1) as u64) as i64
    }

    pub fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.below(xs.len() as u64) as usize]
    }

    /// A distribution over `support` distinct states out of `n`.
    fn dist(&mut self, n: usize, support: usize) -> Vec<(String, Rational)> {
        let mut states: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i as u64 + 1) as usize;
            states.swap(i, j);
        }
        states.truncate(support);
        let q = *self.pick(&[2i64, 3, 4, 5, 6, 8, 10]).max(&(support as i64));
        // positive integer parts summing to q
        let mut parts = vec![1i64; support];
        for _ in 0..q - support as i64 {
            let i = self.below(support as u64) as usize;
            parts[i] += 1;
        }
        states
            .into_iter()
            .zip(parts)
            .map(|(s, k)| (format!("q{s}"), rat(k, q)))
            .collect()
    }

    pub fn gain(&mut self) -> Rational {
        let d = *self.pick(&[1i64, 2, 3, 5]);
        rat(self.range(-12, 12), d)
    }

    pub fn rho(&mut self) -> Rational {
        self.pick(&[rat(5, 4), rat(4, 3), rat(3, 2), rat(2, 1), rat(5, 2), rat(3, 1)])
            .clone()
    }

    /// At most `max_states` states and `max_actions` actions per state.
    pub fn model(&mut self, max_states: usize, max_actions: usize) -> SolvencyMdp {
        let n = self.range(1, max_states as i64) as usize;
        let mut b = ModelBuilder::new();
        for s in 0..n {
            b.state(format!("q{s}"));
        }
        for s in 0..n {
            let k = self.range(1, max_actions as i64);
            for a in 0..k {
                let support = self.range(1, n.min(3) as i64) as usize;
                let dist = self.dist(n, support);
                let g = self.gain();
                b.action(format!("q{s}"), format!("a{a}"), g, dist);
            }
        }
        let rho = self.rho();
        b.build_solvency(rho).expect("generated model is valid")
    }

    /// A model with `U(M) > L(M)`.
    pub fn spread_model(&mut self, max_states: usize, max_actions: usize) -> SolvencyMdp {
        loop {
            let m = self.model(max_states, max_actions);
            if !compute_bounds(&m).spread().is_zero() {
                return m;
            }
        }
    }

    /// A wealth near `[lo, hi]` whose denominator carries [`ODD`].
    pub fn odd_wealth(&mut self, lo: &Rational, hi: &Rational) -> Rational {
        let t = rat(self.range(-1, 11), 10);
        let base = lo + &(&(hi - lo) * &t);
        let r = self.range(1, ODD - 1);
        base.floor_to_multiple(&rat(1, 1)) + rat(r, ODD)
    }

    pub fn knapsack(&mut self, max_items: usize, max_weight: u64) -> KnapsackInstance {
        let n = self.range(2, max_items as i64) as usize;
        let items: Vec<Item> = (0..n)
            .map(|_| Item {
                w: 1 + self.below(max_weight),
                v: rat(self.range(1, 12), *self.pick(&[16i64, 32, 48, 64])),
            })
            .collect();
        let w_tot: u64 = items.iter().map(|i| i.w).sum();
        let weight_bound = self.below(w_tot + 1);
        let v_tot: Rational = items.iter().map(|i| i.v.clone()).sum();
        let value_bound = &v_tot * &rat(self.range(1, 12), 12);
        KnapsackInstance {
            items,
            weight_bound,
            value_bound,
        }
    }
}

/// An epsilon for which the horizon is at most `k`.
pub fn epsilon_for_horizon(m: &SolvencyMdp, g: &mut Gen, k: i64) -> Rational {
    let d = compute_bounds(m).spread();
    let f = rat(g.range(8, 15), 8);
    rat(4, 1) * d * f / m.rho().pow(k)
}

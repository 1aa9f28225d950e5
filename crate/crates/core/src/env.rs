//! Reward and context environments.
//!
//! Rewards are Bernoulli draws keyed by `(seed, draw index)`: the i-th draw of
//! a run is a pure function of the master seed and `i`, so replays are exact.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;


use crate::link::mu;
use crate::rng::{mix64, KeyedStream};
use crate::types::{ArmVector, Theta};

/// Source of binary rewards for measurement arms.
pub trait RewardSampler {
    /// Draws `y ~ Bernoulli(μ(xᵀθ*))` for the next sample index.
    fn sample(&mut self, arm: &ArmVector) -> u8;

    /// Number of draws consumed so far.
    fn draws(&self) -> u64;
}

/// The canonical logistic environment: hidden parameter plus a keyed counter
/// stream.
#[derive(Debug, Clone)]
pub struct BernoulliEnv {
    theta_star: Theta,
    seed: u64,
    counter: u64,
}

impl BernoulliEnv {
    pub fn new(theta_star: Theta, seed: u64) -> Self {
        BernoulliEnv { theta_star, seed, counter: 0 }
    }

    pub fn theta_star(&self) -> &Theta {
        &self.theta_star
    }
}

impl RewardSampler for BernoulliEnv {
    #[inline]
    fn sample(&mut self, arm: &ArmVector) -> u8 {
        let u = crate::rng::u01(self.seed, self.counter);
        self.counter += 1;
        u8::from(u < mu(arm.dot_theta(&self.theta_star)))
    }

    fn draws(&self) -> u64 {
        self.counter
    }
}

/// Source of per-step contextual arm sets `{x_{t,1}, …, x_{t,K}}`.
pub trait ContextSampler {
    fn dim(&self) -> usize;
    fn n_arms(&self) -> usize;
    /// The arm set presented at step `t` (1-based). Must be a pure function of
    /// `t` so that paired policies see identical streams.
    fn arms_at(&self, t: u64) -> Vec<ArmVector>;
}

/// I.i.d. contexts drawn uniformly from the unit sphere, keyed by
/// `(seed, t, a)`.
#[derive(Debug, Clone)]
pub struct SphereContexts {
    d: usize,
    k: usize,
    seed: u64,
}

impl SphereContexts {
    pub fn new(d: usize, k: usize, seed: u64) -> Self {
        SphereContexts { d, k, seed }
    }
}

impl ContextSampler for SphereContexts {
    fn dim(&self) -> usize {
        self.d
    }

    fn n_arms(&self) -> usize {
        self.k
    }

    fn arms_at(&self, t: u64) -> Vec<ArmVector> {
        let mut out = Vec::with_capacity(self.k);
        for a in 0..self.k as u64 {
            let key = mix64(self.seed, t.wrapping_mul(1 << 20) ^ a);
            let mut s = KeyedStream::new(key);
            let mut coords = Vec::with_capacity(self.d);
            let mut norm_sq;
            loop {
                coords.clear();
                norm_sq = 0.0;
                for _ in 0..self.d {
                    let g = s.next_gaussian();
                    coords.push(g);
                    norm_sq += g * g;
                }
                if norm_sq > 1e-12 {
                    break;
                }
            }
            let inv = 1.0 / norm_sq.sqrt();
            for c in coords.iter_mut() {
                *c *= inv;
            }
            out.push(ArmVector::new(coords).expect("unit vector"));
        }
        out
    }
}

/// A finite context distribution cycling deterministically by key; handy for
/// enumeration oracles in tests.
#[derive(Debug, Clone)]
pub struct FiniteContexts {
    sets: Vec<Vec<ArmVector>>,
    seed: u64,
}

impl FiniteContexts {
    pub fn new(sets: Vec<Vec<ArmVector>>, seed: u64) -> Self {
        assert!(!sets.is_empty());
        FiniteContexts { sets, seed }
    }

    pub fn sets(&self) -> &[Vec<ArmVector>] {
        &self.sets
    }
}

impl ContextSampler for FiniteContexts {
    fn dim(&self) -> usize {
        self.sets[0][0].dim()
    }

    fn n_arms(&self) -> usize {
        self.sets[0].len()
    }

    fn arms_at(&self, t: u64) -> Vec<ArmVector> {
        let idx = (mix64(self.seed, t) % self.sets.len() as u64) as usize;
        self.sets[idx].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_matches_link_probability() {
        let theta = Theta::new(vec![2.0, 0.0]);
        let arm = ArmVector::basis(2, 0);
        let mut env = BernoulliEnv::new(theta, 3);
        let n = 100_000;
        let mut ones = 0u64;
        for _ in 0..n {
            ones += u64::from(env.sample(&arm));
        }
        let mean = ones as f64 / n as f64;
        let p = mu(2.0);
        assert!((mean - p).abs() < 0.005, "mean {mean} vs {p}");
        assert_eq!(env.draws(), n);
    }

    #[test]
    fn env_is_replayable() {
        let theta = Theta::new(vec![0.5]);
        let arm = ArmVector::basis(1, 0);
        let mut a = BernoulliEnv::new(theta.clone(), 11);
        let mut b = BernoulliEnv::new(theta, 11);
        for _ in 0..200 {
            assert_eq!(a.sample(&arm), b.sample(&arm));
        }
    }

    #[test]
    fn sphere_contexts_unit_norm_and_pure() {
        let c = SphereContexts::new(5, 4, 7);
        let arms1 = c.arms_at(13);
        let arms2 = c.arms_at(13);
        assert_eq!(arms1.len(), 4);
        for (a, b) in arms1.iter().zip(&arms2) {
            assert_eq!(a, b);
            assert!((a.norm() - 1.0).abs() < 1e-12);
        }
        assert_ne!(c.arms_at(13), c.arms_at(14));
    }
}

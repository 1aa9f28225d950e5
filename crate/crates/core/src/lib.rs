//! Variance-dependent confidence bounds for the linear logistic model and the
//! bandit algorithms built on them.
//!
//! The crate is organised around a small set of numeric primitives:
//!
//! * [`link`] — the logistic link, its derivatives, secant slopes and the
//!   self-concordance helpers everything else leans on.
//! * [`types`] — arm vectors, parameter vectors, datasets and Fisher matrices.
//! * [`mle`] — damped-Newton maximum-likelihood estimation (plain, ridge and
//!   norm-projected variants).
//! * [`confidence`] — fixed-design confidence widths, the burn-in condition
//!   and a Monte-Carlo coverage harness.
//! * [`design`] — Frank–Wolfe experimental design on the simplex and the
//!   efficient rounding procedure turning weights into integer allocations.
//! * [`pure_explore`] — transductive pure-exploration loops (elimination
//!   algorithms, a recycling heuristic, a passive baseline) and the
//!   sample-complexity evaluator.
//! * [`contextual`] — the bucketed contextual bandit and its baselines.
//! * [`bounds`] — constructive lower-bound tooling: hard instances,
//!   Bernoulli KLs, transportation bounds.
//!
//! Everything is deterministic: randomness flows through counter-based keyed
//! generators in [`rng`], so a run is a pure function of its seed.
//!
//! The crate is `no_std`-compatible (with `alloc`); the companion CLI crate
//! carries file formats and orchestration.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod bounds;
pub mod confidence;
pub mod contextual;
pub mod design;
pub mod env;
pub mod link;
pub mod linalg;
pub mod mle;
pub mod pure_explore;
pub mod rng;
pub mod types;

mod error;

pub use error::{Error, Result};

//! Domain types: arm vectors, parameters, datasets, Fisher matrices.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::link::mu_dot;
use crate::{Error, Result};

/// Slack used when validating norm constraints.
pub const NORM_SLACK: f64 = 1e-9;

/// A measurement or decision arm in `R^d`.
///
/// Algorithms that rely on the fixed-design concentration bound assume
/// `‖x‖ ≤ 1`; [`ArmVector::new`] enforces that up to a 1e-9 slack, while
/// [`ArmVector::new_unbounded`] is the explicit override for settings (such as
/// pairwise differences) that step outside the unit ball.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArmVector {
    coords: DVector<f64>,
}

impl ArmVector {
    pub fn new(coords: impl Into<Vec<f64>>) -> Result<Self> {
        let arm = Self::new_unbounded(coords)?;
        if arm.norm() > 1.0 + NORM_SLACK {
            return Err(Error::InvalidInstance(
                "arm norm exceeds 1; use new_unbounded to override".into(),
            ));
        }
        Ok(arm)
    }

    /// Constructs an arm without the unit-norm check (finiteness is still
    /// required).
    pub fn new_unbounded(coords: impl Into<Vec<f64>>) -> Result<Self> {
        let v = DVector::from_vec(coords.into());
        if v.is_empty() {
            return Err(Error::InvalidInstance("arm dimension must be ≥ 1".into()));
        }
        if !v.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInstance("arm has non-finite coordinates".into()));
        }
        Ok(ArmVector { coords: v })
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        Self::new_unbounded(v.as_slice().to_vec())
    }

    /// Standard basis vector `e_i` in `R^d`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        ArmVector { coords: v }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn dot_theta(&self, theta: &Theta) -> f64 {
        self.coords.dot(theta.coords())
    }

    pub fn dot(&self, other: &ArmVector) -> f64 {
        self.coords.dot(&other.coords)
    }

    /// The difference `self - other` as a plain vector.
    pub fn minus(&self, other: &ArmVector) -> DVector<f64> {
        &self.coords - &other.coords
    }

    /// Exact-coordinate equality key (bit patterns), used for `t_eff`
    /// bookkeeping.
    pub(crate) fn bit_key(&self) -> Vec<u64> {
        self.coords.iter().map(|c| c.to_bits()).collect()
    }
}

impl fmt::Display for ArmVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords.as_slice())
    }
}

/// A parameter vector, optionally carrying the norm bound it was constrained
/// to.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Theta {
    coords: DVector<f64>,
    norm_bound: Option<f64>,
}

impl Theta {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Theta { coords: DVector::from_vec(coords.into()), norm_bound: None }
    }

    pub fn from_vector(v: DVector<f64>) -> Self {
        Theta { coords: v, norm_bound: None }
    }

    pub fn zeros(d: usize) -> Self {
        Theta { coords: DVector::zeros(d), norm_bound: None }
    }

    /// Attaches a norm bound `S*`; fails if the coordinates already violate it.
    pub fn with_norm_bound(mut self, s: f64) -> Result<Self> {
        if self.coords.norm() > s + NORM_SLACK {
            return Err(Error::InvalidInstance("theta norm exceeds its stated bound".into()));
        }
        self.norm_bound = Some(s);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn norm_bound(&self) -> Option<f64> {
        self.norm_bound
    }
}

/// An ordered collection of `(arm, binary label)` samples.
///
/// Samples are stored grouped by distinct arm (exact coordinate equality) in
/// first-appearance order, with per-arm pull and success counts. Every
/// consumer in the crate — likelihoods, gradients, Fisher matrices, KL sums —
/// is permutation-invariant, so the grouping is a lossless sufficient
/// statistic while keeping million-sample cumulative fits cheap.
#[derive(Debug, Clone, Default)]
pub struct LogisticDataset {
    arms: Vec<ArmVector>,
    counts: Vec<u64>,
    successes: Vec<u64>,
    total: u64,
    index: BTreeMap<Vec<u64>, usize>,
}

impl LogisticDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ArmVector, u8)>,
    {
        let mut ds = Self::new();
        for (arm, y) in pairs {
            ds.push(arm, y)?;
        }
        Ok(ds)
    }

    fn group_index(&mut self, arm: ArmVector) -> Result<usize> {
        if let Some(first) = self.arms.first() {
            if first.dim() != arm.dim() {
                return Err(Error::InvalidInstance("all arms must share one dimension".into()));
            }
        }
        let key = arm.bit_key();
        Ok(match self.index.get(&key) {
            Some(&i) => i,
            None => {
                self.arms.push(arm);
                self.counts.push(0);
                self.successes.push(0);
                self.index.insert(key, self.arms.len() - 1);
                self.arms.len() - 1
            }
        })
    }

    pub fn push(&mut self, arm: ArmVector, label: u8) -> Result<()> {
        if label > 1 {
            return Err(Error::InvalidInstance("labels must lie in {0,1}".into()));
        }
        let idx = self.group_index(arm)?;
        self.counts[idx] += 1;
        self.successes[idx] += u64::from(label);
        self.total += 1;
        Ok(())
    }

    /// Records `count` pulls of `arm` with `successes` ones among them.
    pub fn push_group(&mut self, arm: ArmVector, count: u64, successes: u64) -> Result<()> {
        if successes > count {
            return Err(Error::InvalidInstance("successes exceed pull count".into()));
        }
        if count == 0 {
            return Ok(());
        }
        let idx = self.group_index(arm)?;
        self.counts[idx] += count;
        self.successes[idx] += successes;
        self.total += count;
        Ok(())
    }

    /// Appends every sample of `other`.
    pub fn merge(&mut self, other: &LogisticDataset) -> Result<()> {
        for i in 0..other.arms.len() {
            self.push_group(other.arms[i].clone(), other.counts[i], other.successes[i])?;
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Total sample count `t`.
    pub fn len(&self) -> u64 {
        self.total
    }

    /// Number of distinct arm vectors `t_eff` (exact coordinate equality).
    pub fn t_eff(&self) -> usize {
        self.arms.len()
    }

    pub fn dim(&self) -> Option<usize> {
        self.arms.first().map(|a| a.dim())
    }

    pub fn distinct_arms(&self) -> &[ArmVector] {
        &self.arms
    }

    /// Iterates `(arm, pulls, successes)` over distinct arms.
    pub fn groups(&self) -> impl Iterator<Item = (&ArmVector, u64, u64)> {
        self.arms
            .iter()
            .zip(self.counts.iter())
            .zip(self.successes.iter())
            .map(|((a, &c), &s)| (a, c, s))
    }
}

/// A fitted maximum-likelihood estimate with solver diagnostics.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MleEstimate {
    pub theta: Theta,
    pub converged: bool,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub separation_detected: bool,
}

/// The Fisher information matrix `H_t(θ) = Σ μ̇(x_sᵀθ) x_s x_sᵀ` together with
/// its evaluation point.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FisherMatrix {
    pub entries: DMatrix<f64>,
    pub at_theta: Theta,
}

impl FisherMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// Exact weighted Gram matrix `Σ_s μ̇(x_sᵀθ) x_s x_sᵀ` over a dataset.
pub fn fisher_info(data: &LogisticDataset, theta: &Theta) -> Result<FisherMatrix> {
    let d = data.dim().ok_or_else(|| Error::InvalidInstance("empty dataset".into()))?;
    if theta.dim() != d {
        return Err(Error::InvalidInstance("theta dimension mismatch".into()));
    }
    let mut h = DMatrix::zeros(d, d);
    for (arm, count, _) in data.groups() {
        let w = count as f64 * mu_dot(arm.dot_theta(theta));
        h.ger(w, arm.coords(), arm.coords(), 1.0);
    }
    Ok(FisherMatrix { entries: h, at_theta: theta.clone() })
}

/// Weighted Gram matrix with caller-provided per-arm weights (used by designs
/// and the lower-bound matrices).
pub(crate) fn weighted_gram(arms: &[ArmVector], weights: &[f64]) -> DMatrix<f64> {
    let d = arms[0].dim();
    let mut m = DMatrix::zeros(d, d);
    for (x, &w) in arms.iter().zip(weights) {
        m.ger(w, x.coords(), x.coords(), 1.0);
    }
    m
}

//! Convex experimental design over the simplex and efficient rounding.
//!
//! Objectives are maxima of weighted quadratic forms
//! `max_j s_j · v_jᵀ M(λ)⁻¹ v_j` where `M(λ) = Σ_x λ_x w_x x xᵀ` with
//! `w_x = μ̇(xᵀθ)` (information-weighted) or `w_x = 1` (G-optimal).
//! The solver is Frank–Wolfe: at each iterate the active max-term supplies
//! the linearisation, the best vertex is the linear-minimisation oracle, and
//! the step is an exact line search of the full max along the segment
//! (available in closed form through a rank-one update). Iterations stop at
//! a relative duality gap of `tol` or at `max_iters`.
//!
//! Rounding follows the efficient design apportionment: start from
//! `⌈(n - p/2) λ_i⌉` over the `p`-point support and repair to total `n` by
//! adjusting the count with extreme count/weight ratio. For
//! `n ≥ r(ε) = (d(d+1)+2)/ε` the allocation satisfies
//! `H_alloc(θ) ⪰ n/(1+ε) · H(λ, θ)` for every θ.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{min_eigenvalue, span_basis, PsdSolver, SPAN_TOL};
use crate::link::mu_dot;
use crate::rng::KeyedStream;
use crate::types::{weighted_gram, ArmVector, FisherMatrix, Theta};
use crate::{Error, Result};

/// Probability weights over a finite arm set.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Design {
    support_arms: Vec<ArmVector>,
    weights: Vec<f64>,
}

impl Design {
    pub fn new(support_arms: Vec<ArmVector>, weights: Vec<f64>) -> Result<Self> {
        if support_arms.is_empty() || support_arms.len() != weights.len() {
            return Err(Error::InvalidInstance("arms/weights length mismatch".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidInstance("weights must be nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInstance(format!("weights sum to {sum}, not 1")));
        }
        Ok(Design { support_arms, weights })
    }

    pub fn uniform(arms: Vec<ArmVector>) -> Result<Self> {
        let n = arms.len();
        if n == 0 {
            return Err(Error::InvalidInstance("empty arm set".into()));
        }
        Design::new(arms, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(arm: ArmVector) -> Self {
        Design { support_arms: vec![arm], weights: vec![1.0] }
    }

    pub fn arms(&self) -> &[ArmVector] {
        &self.support_arms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.support_arms[0].dim()
    }

    /// Drops entries with weight below `floor` and renormalises.
    pub fn truncated(&self, floor: f64) -> Design {
        let mut arms = Vec::new();
        let mut ws = Vec::new();
        for (a, &w) in self.support_arms.iter().zip(&self.weights) {
            if w > floor {
                arms.push(a.clone());
                ws.push(w);
            }
        }
        let sum: f64 = ws.iter().sum();
        for w in ws.iter_mut() {
            *w /= sum;
        }
        Design { support_arms: arms, weights: ws }
    }
}

/// `A(λ) = Σ λ_x x xᵀ`.
pub fn design_gram(lambda: &Design) -> DMatrix<f64> {
    weighted_gram(lambda.arms(), lambda.weights())
}

/// `H(λ, θ) = Σ λ_x μ̇(xᵀθ) x xᵀ`.
pub fn design_fisher(lambda: &Design, theta: &Theta) -> Result<FisherMatrix> {
    if theta.dim() != lambda.dim() {
        return Err(Error::InvalidInstance("theta dimension mismatch".into()));
    }
    let weights: Vec<f64> =
        lambda.arms().iter().zip(lambda.weights()).map(|(x, &w)| w * mu_dot(x.dot_theta(theta))).collect();
    Ok(FisherMatrix { entries: weighted_gram(lambda.arms(), &weights), at_theta: theta.clone() })
}

/// What a design objective measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ObjectiveKind {
    /// `max_x ‖x‖²_{A(λ)⁻¹}` over the arm set (unweighted Gram).
    GOptimal,
    /// `scale · max_v ‖v‖²_{H(λ,θ)⁻¹}` over explicit directions.
    MaxDirectionH,
    /// `scale · max_{(z,z')} ‖z-z'‖²_{H(λ,θ)⁻¹}` over decision-arm pairs.
    MaxPairH,
}

/// One term family of a design objective; several can be combined by max in
/// [`minimize_design`].
#[derive(Debug, Clone)]
pub struct DesignObjective {
    pub kind: ObjectiveKind,
    /// Required for the H-weighted kinds, forbidden for G-optimal.
    pub theta: Option<Theta>,
    /// Directions the maximum ranges over (empty for G-optimal: the arm set
    /// itself is used).
    pub directions: Vec<DVector<f64>>,
    pub scale: f64,
}

impl DesignObjective {
    pub fn g_optimal() -> Self {
        DesignObjective { kind: ObjectiveKind::GOptimal, theta: None, directions: Vec::new(), scale: 1.0 }
    }

    pub fn max_direction_h(theta: Theta, directions: Vec<DVector<f64>>, scale: f64) -> Self {
        DesignObjective { kind: ObjectiveKind::MaxDirectionH, theta: Some(theta), directions, scale }
    }

    /// All unordered pair differences `z - z'` of the given decision arms.
    pub fn max_pair_h(theta: Theta, decision_arms: &[ArmVector], scale: f64) -> Self {
        let mut dirs = Vec::new();
        for i in 0..decision_arms.len() {
            for j in (i + 1)..decision_arms.len() {
                dirs.push(decision_arms[i].minus(&decision_arms[j]));
            }
        }
        DesignObjective { kind: ObjectiveKind::MaxPairH, theta: Some(theta), directions: dirs, scale }
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            ObjectiveKind::GOptimal => {
                if self.theta.is_some() {
                    return Err(Error::InvalidConfig("G-optimal forbids theta".into()));
                }
            }
            ObjectiveKind::MaxDirectionH | ObjectiveKind::MaxPairH => {
                if self.theta.is_none() {
                    return Err(Error::InvalidConfig("H-weighted objectives require theta".into()));
                }
            }
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidConfig("objective scale must be positive".into()));
        }
        Ok(())
    }
}

/// Evaluates one objective at a design. Directions outside the range of
/// `M(λ)` report `+∞` (the objective is unbounded for that λ).
pub fn eval_objective(lambda: &Design, obj: &DesignObjective) -> Result<f64> {
    obj.validate()?;
    let matrix = match obj.kind {
        ObjectiveKind::GOptimal => design_gram(lambda),
        _ => design_fisher(lambda, obj.theta.as_ref().unwrap())?.entries,
    };
    let solver = PsdSolver::new(&matrix);
    let quad = |v: &DVector<f64>| -> f64 {
        if solver.in_span(v) {
            solver.quad_form(v)
        } else {
            f64::INFINITY
        }
    };
    let value = match obj.kind {
        ObjectiveKind::GOptimal => {
            lambda.arms().iter().map(|x| quad(x.coords())).fold(f64::NEG_INFINITY, f64::max)
        }
        _ => obj.directions.iter().map(quad).fold(f64::NEG_INFINITY, f64::max),
    };
    Ok(obj.scale * value)
}

/// Options for [`minimize_design`].
#[derive(Debug, Clone, Copy)]
pub struct DesignOptions {
    /// Relative Frank–Wolfe duality-gap tolerance.
    pub tol: f64,
    pub max_iters: usize,
    /// Weights below this are zeroed and the rest renormalised.
    pub support_floor: f64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions { tol: 1e-4, max_iters: 5000, support_floor: 1e-9 }
    }
}

/// A solved design with optimiser diagnostics.
#[derive(Debug, Clone)]
pub struct DesignResult {
    pub design: Design,
    /// Objective value at the (truncated) returned design.
    pub value: f64,
    /// Relative optimality gap: the Kiefer–Wolfowitz certificate for
    /// G-optimal, the Frank–Wolfe duality gap for a single term, and the
    /// active-term surrogate otherwise (nonnegative in all cases).
    pub fw_gap: f64,
    pub iterations: usize,
    /// True when a valid gap certificate reached `tol`; multi-term maxima run
    /// to `max_iters` and report the best iterate without a certificate.
    pub converged: bool,
}

struct Term {
    v: DVector<f64>,
    scale: f64,
}

/// Minimises `max_j s_j ‖v_j‖²_{M(λ)⁻¹}` over the simplex on `arms`.
///
/// All objectives in the slice are combined by max; H-weighted objectives
/// must share one θ and cannot be mixed with G-optimal (the two use different
/// information matrices).
pub fn minimize_design(
    arms: &[ArmVector],
    objectives: &[DesignObjective],
    opts: DesignOptions,
) -> Result<DesignResult> {
    if arms.is_empty() {
        return Err(Error::InvalidInstance("empty arm set".into()));
    }
    if objectives.is_empty() {
        return Err(Error::InvalidConfig("no objectives".into()));
    }
    for obj in objectives {
        obj.validate()?;
    }
    let g_count = objectives.iter().filter(|o| o.kind == ObjectiveKind::GOptimal).count();
    if g_count > 0 && g_count != objectives.len() {
        return Err(Error::InvalidConfig(
            "cannot mix G-optimal (A-matrix) with H-weighted objectives".into(),
        ));
    }
    let theta = objectives.iter().find_map(|o| o.theta.clone());
    if let Some(t) = &theta {
        for o in objectives {
            if let Some(ot) = &o.theta {
                if ot.coords() != t.coords() {
                    return Err(Error::InvalidConfig(
                        "all H-weighted objectives must share one theta".into(),
                    ));
                }
            }
        }
    }

    // Work in an orthonormal basis of span(X): keeps M positive definite and
    // rank-one updates exact.
    let coord_vecs: Vec<DVector<f64>> = arms.iter().map(|a| a.coords().clone()).collect();
    let q = span_basis(&coord_vecs);
    let r = q.ncols();
    let reduced: Vec<DVector<f64>> = coord_vecs.iter().map(|x| q.transpose() * x).collect();

    // Per-arm information weights.
    let weights: Vec<f64> = match &theta {
        Some(t) => arms.iter().map(|x| mu_dot(x.dot_theta(t)).max(1e-300)).collect(),
        None => vec![1.0; arms.len()],
    };

    // Flatten objectives into terms, checking feasibility: a direction with a
    // component outside span(X) is infinite for every design.
    let mut terms: Vec<Term> = Vec::new();
    for obj in objectives {
        match obj.kind {
            ObjectiveKind::GOptimal => {
                for x in &reduced {
                    terms.push(Term { v: x.clone(), scale: obj.scale });
                }
            }
            _ => {
                for v in &obj.directions {
                    let in_plane = &q * (q.transpose() * v);
                    if (v - &in_plane).norm() > SPAN_TOL * v.norm().max(1e-300) {
                        return Err(Error::NoSpanningSupport);
                    }
                    terms.push(Term { v: q.transpose() * v, scale: obj.scale });
                }
            }
        }
    }
    if terms.is_empty() {
        return Err(Error::InvalidConfig("objectives contain no directions".into()));
    }

    let n = arms.len();
    let state = FwState { reduced: &reduced, weights: &weights, terms: &terms, r };
    let solved = if g_count > 0 {
        // Pure G-optimal: every leverage ties at the optimum, so the active
        // term switches each step. The Kiefer–Wolfowitz equivalence gives both
        // the vertex (max leverage), an exact step (the D-optimal one) and a
        // true optimality certificate (max leverage - r).
        state.solve_kiefer_wolfowitz(&opts)
    } else {
        state.solve_max_terms(&opts)
    };

    let full = Design::new(arms.to_vec(), solved.lambda)?;
    let design = full.truncated(opts.support_floor);
    let value = objectives
        .iter()
        .map(|o| eval_objective(&design, o))
        .try_fold(f64::NEG_INFINITY, |acc, v| v.map(|v| acc.max(v)))?;
    Ok(DesignResult {
        design,
        value,
        fw_gap: solved.rel_gap.max(0.0),
        iterations: solved.iterations,
        converged: solved.converged,
    })
}

struct FwState<'a> {
    reduced: &'a [DVector<f64>],
    weights: &'a [f64],
    terms: &'a [Term],
    r: usize,
}

struct FwSolved {
    lambda: Vec<f64>,
    rel_gap: f64,
    iterations: usize,
    converged: bool,
}

impl FwState<'_> {
    fn build_m(&self, lam: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.r, self.r);
        for i in 0..lam.len() {
            if lam[i] > 0.0 {
                m.ger(lam[i] * self.weights[i], &self.reduced[i], &self.reduced[i], 1.0);
            }
        }
        m
    }

    /// Applies the vertex step `λ ← (1-γ)λ + γ e_x` with a rank-one update of
    /// the maintained inverse.
    fn apply_step(&self, lambda: &mut [f64], m_inv: &mut DMatrix<f64>, x: usize, gamma: f64) {
        let gamma = gamma.clamp(0.0, 0.999);
        for l in lambda.iter_mut() {
            *l *= 1.0 - gamma;
        }
        lambda[x] += gamma;
        let u = &*m_inv * &self.reduced[x];
        let ell = self.reduced[x].dot(&u);
        let c = gamma * self.weights[x] / (1.0 - gamma);
        let mut update = DMatrix::zeros(self.r, self.r);
        update.ger(-c / (1.0 + c * ell), &u, &u, 1.0);
        *m_inv = (&*m_inv + update) / (1.0 - gamma);
    }

    /// Fedorov–Wynn for the G-optimal criterion: vertex = current maximum
    /// leverage, step = exact log-det line search, certificate = how far the
    /// maximum leverage sits above the Kiefer–Wolfowitz value `r`.
    fn solve_kiefer_wolfowitz(&self, opts: &DesignOptions) -> FwSolved {
        let n = self.reduced.len();
        let rf = self.r as f64;
        let mut lambda = vec![1.0 / n as f64; n];
        let mut m_inv = PsdSolver::new(&self.build_m(&lambda)).pinv();
        let mut rel_gap = f64::INFINITY;
        let mut iterations = 0;
        for iter in 0..opts.max_iters {
            iterations = iter + 1;
            if iter % 256 == 255 {
                m_inv = PsdSolver::new(&self.build_m(&lambda)).pinv();
            }
            let mut best_x = 0;
            let mut ell_max = f64::NEG_INFINITY;
            for i in 0..n {
                let u = &m_inv * &self.reduced[i];
                let ell = self.weights[i] * self.reduced[i].dot(&u);
                if ell > ell_max {
                    ell_max = ell;
                    best_x = i;
                }
            }
            // max-leverage ≥ r always; equality at the optimum.
            rel_gap = (ell_max - rf) / rf;
            if rel_gap <= opts.tol {
                return FwSolved { lambda, rel_gap, iterations, converged: true };
            }
            let gamma = ((ell_max / rf - 1.0) / (ell_max - 1.0)).clamp(1e-12, 0.999);
            self.apply_step(&mut lambda, &mut m_inv, best_x, gamma);
        }
        FwSolved { lambda, rel_gap, iterations, converged: rel_gap <= opts.tol }
    }

    /// Frank–Wolfe on a max of quadratic terms. The active term supplies the
    /// linearisation, the step is `2/(iter+2)` (which averages over tied
    /// terms), except in the single-term case where the active-term gap is a
    /// true certificate and an exact line search is sound. The best iterate
    /// seen is returned.
    fn solve_max_terms(&self, opts: &DesignOptions) -> FwSolved {
        let n = self.reduced.len();
        let single = self.terms.len() == 1;
        let mut lambda = vec![1.0 / n as f64; n];
        let mut m_inv = PsdSolver::new(&self.build_m(&lambda)).pinv();
        let mut best_lambda = lambda.clone();
        let mut best_f = f64::INFINITY;
        let mut rel_gap = f64::INFINITY;
        let mut iterations = 0;
        let mut converged = false;
        for iter in 0..opts.max_iters {
            iterations = iter + 1;
            if iter % 128 == 127 {
                m_inv = PsdSolver::new(&self.build_m(&lambda)).pinv();
            }

            let mut active = 0;
            let mut f_val = f64::NEG_INFINITY;
            let mut raw = alloc::vec![0.0; self.terms.len()];
            for (j, t) in self.terms.iter().enumerate() {
                let u = &m_inv * &t.v;
                raw[j] = t.v.dot(&u);
                if t.scale * raw[j] > f_val {
                    f_val = t.scale * raw[j];
                    active = j;
                }
            }
            if f_val < best_f {
                best_f = f_val;
                best_lambda.copy_from_slice(&lambda);
            }

            let u_active = &m_inv * &self.terms[active].v;
            let mut best_x = 0;
            let mut best_score = f64::NEG_INFINITY;
            for i in 0..n {
                let b = self.reduced[i].dot(&u_active);
                let score = self.weights[i] * b * b;
                if score > best_score {
                    best_score = score;
                    best_x = i;
                }
            }
            let gap = self.terms[active].scale * (best_score - raw[active]);
            rel_gap = gap / f_val.max(f64::MIN_POSITIVE);
            if single && rel_gap <= opts.tol {
                converged = true;
                break;
            }

            let gamma = if single {
                // Exact line search: along the segment every term value is
                // (raw - c b²/(1+cℓ))/(1-γ) with c = γw/(1-γ).
                let w = self.weights[best_x];
                let u_x = &m_inv * &self.reduced[best_x];
                let ell = self.reduced[best_x].dot(&u_x);
                let b = self.terms[0].v.dot(&u_x);
                let phi = |g: f64| -> f64 {
                    let c = g * w / (1.0 - g);
                    (raw[0] - c * b * b / (1.0 + c * ell)) / (1.0 - g)
                };
                golden_section(phi, 0.0, 0.999).max(1e-12)
            } else {
                // Offset keeps the first step strictly interior; a full step
                // to a vertex makes M rank one and every other term infinite.
                2.0 / (iter as f64 + 3.0)
            };
            self.apply_step(&mut lambda, &mut m_inv, best_x, gamma);
        }

        if single || best_f == f64::INFINITY {
            best_lambda = lambda;
        }
        FwSolved { lambda: best_lambda, rel_gap, iterations, converged }
    }
}

/// Minimiser of a convex scalar function over `[lo, hi]`.
fn golden_section(phi: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const RATIO: f64 = 0.618_033_988_749_894_9;
    let mut g1 = hi - RATIO * (hi - lo);
    let mut g2 = lo + RATIO * (hi - lo);
    let (mut f1, mut f2) = (phi(g1), phi(g2));
    for _ in 0..70 {
        if f1 <= f2 {
            hi = g2;
            g2 = g1;
            f2 = f1;
            g1 = hi - RATIO * (hi - lo);
            f1 = phi(g1);
        } else {
            lo = g1;
            g1 = g2;
            f1 = f2;
            g2 = lo + RATIO * (hi - lo);
            f2 = phi(g2);
        }
    }
    0.5 * (lo + hi)
}

/// Minimum sample count `r(ε) = (d(d+1)+2)/ε` for the rounding guarantee.
pub fn r_eps(d: usize, epsilon: f64) -> f64 {
    (d as f64 * (d as f64 + 1.0) + 2.0) / epsilon
}

/// The main-text alternative `d²/ε`, kept as a configuration value for
/// comparisons.
pub fn r_eps_main_text(d: usize, epsilon: f64) -> f64 {
    (d as f64) * (d as f64) / epsilon
}

/// An integer allocation of `n` samples over a design's support.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundedAllocation {
    counts: Vec<(ArmVector, u64)>,
    pub n: u64,
    pub epsilon: f64,
}

impl RoundedAllocation {
    pub fn counts(&self) -> &[(ArmVector, u64)] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|(_, c)| c).sum()
    }

    pub fn arms(&self) -> Vec<ArmVector> {
        self.counts.iter().filter(|(_, c)| *c > 0).map(|(a, _)| a.clone()).collect()
    }
}

/// Efficient apportionment of `n` samples to the design weights with the
/// `(1+ε)` Loewner guarantee; requires `n ≥ r(ε)`.
pub fn round_design(lambda: &Design, n: u64, epsilon: f64) -> Result<RoundedAllocation> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidConfig("epsilon must lie in (0, 1]".into()));
    }
    let d = lambda.dim();
    let needed = r_eps(d, epsilon).ceil() as u64;
    if n < needed {
        return Err(Error::TooFewSamples { needed, got: n });
    }
    let support = lambda.truncated(0.0);
    let p = support.arms().len();
    let mut counts: Vec<u64> = support
        .weights()
        .iter()
        .map(|&w| ((n as f64 - p as f64 / 2.0) * w).ceil().max(0.0) as u64)
        .collect();

    let mut total: u64 = counts.iter().sum();
    while total != n {
        if total > n {
            // Decrement the entry with maximal (count-1)/weight.
            let mut pick = usize::MAX;
            let mut best = f64::NEG_INFINITY;
            for i in 0..p {
                if counts[i] == 0 {
                    continue;
                }
                let ratio = (counts[i] as f64 - 1.0) / support.weights()[i];
                if ratio > best {
                    best = ratio;
                    pick = i;
                }
            }
            counts[pick] -= 1;
            total -= 1;
        } else {
            // Increment the entry with minimal count/weight.
            let mut pick = 0;
            let mut best = f64::INFINITY;
            for i in 0..p {
                let ratio = counts[i] as f64 / support.weights()[i];
                if ratio < best {
                    best = ratio;
                    pick = i;
                }
            }
            counts[pick] += 1;
            total += 1;
        }
    }

    let alloc = RoundedAllocation {
        counts: support.arms().iter().cloned().zip(counts).collect(),
        n,
        epsilon,
    };

    // Post-hoc Loewner audit at a handful of seeded parameter points.
    let mut probe = KeyedStream::new(0x5256_4F44 ^ (d as u64) << 32 ^ n);
    for probe_idx in 0..5 {
        let theta = if probe_idx == 0 {
            Theta::zeros(d)
        } else {
            let mut v = DVector::zeros(d);
            for i in 0..d {
                v[i] = probe.next_gaussian();
            }
            let norm = v.norm();
            if norm > 0.0 {
                v *= 2.0 * probe.next_u01() / norm;
            }
            Theta::from_vector(v)
        };
        let h_lambda = design_fisher(&support, &theta)?.entries;
        let alloc_weights: Vec<f64> = alloc
            .counts
            .iter()
            .map(|(x, c)| *c as f64 * mu_dot(x.dot_theta(&theta)))
            .collect();
        let arm_list: Vec<ArmVector> = alloc.counts.iter().map(|(a, _)| a.clone()).collect();
        let h_alloc = weighted_gram(&arm_list, &alloc_weights);
        let scaled = &h_lambda * (n as f64 / (1.0 + epsilon));
        let slack = 1e-9 * h_alloc.trace().max(1.0);
        if min_eigenvalue(&(&h_alloc - &scaled)) < -slack {
            return Err(Error::InvalidInstance(
                "rounding Loewner guarantee violated in post-hoc audit".into(),
            ));
        }
    }
    Ok(alloc)
}

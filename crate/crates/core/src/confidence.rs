//! Fixed-design confidence widths for the logistic MLE.
//!
//! The central bound: if the burn-in condition
//! `ξ²_t = max_s ‖x_s‖²_{H_t(θ*)⁻¹} ≤ 1/γ(d)` holds with
//! `γ(d) = d + ln(6(2+t_eff)/δ)`, then with probability at least `1-δ`
//!
//! `|xᵀ(θ̂_t - θ*)| ≤ 3.5 ‖x‖_{H_t(θ*)⁻¹} √(ln(2(2+t_eff)/δ))`
//!
//! jointly with the variance-equivalence event (√2.2 factors). The empirical
//! variant replaces `H_t(θ*)` by `H_t(θ̂_t)` and 3.5 by 5.2. Two comparison
//! widths are provided: the `κ⁻¹`-inflated form and the anytime regularised
//! form.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use crate::env::{BernoulliEnv, RewardSampler};
use crate::linalg::PsdSolver;
use crate::mle::{fit_mle, MleOptions};
use crate::rng::derive_seed;
use crate::types::{fisher_info, ArmVector, FisherMatrix, LogisticDataset, Theta};
use crate::{Error, Result};

/// Constant in front of the true-variance width.
pub const WIDTH_CONST_TRUE: f64 = 3.5;
/// Constant in front of the empirical-variance width.
pub const WIDTH_CONST_EMPIRICAL: f64 = 5.2;
/// Variance-equivalence factor in the `E_var` event.
pub const VAR_EVENT_FACTOR: f64 = 2.2;

/// Parameters of the confidence statement.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfidenceParams {
    pub delta: f64,
    pub t_eff: usize,
    pub d: usize,
}

impl ConfidenceParams {
    pub fn new(delta: f64, t_eff: usize, d: usize) -> Result<Self> {
        if !(delta > 0.0 && delta <= (-1.0f64).exp()) {
            return Err(Error::InvalidConfig("delta must lie in (0, e^{-1}]".into()));
        }
        if t_eff == 0 || d == 0 {
            return Err(Error::InvalidConfig("t_eff and d must be positive".into()));
        }
        Ok(ConfidenceParams { delta, t_eff, d })
    }
}

/// Which width formula produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BoundFamily {
    Thm1True,
    Thm1Empirical,
    Li17,
    FauryAnytime,
}

/// A confidence interval half-width with its provenance.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WidthReport {
    /// `xᵀθ` at the matrix's evaluation point.
    pub center: f64,
    pub half_width: f64,
    pub bound_family: BoundFamily,
    /// Set only when the design arms were supplied for the burn-in check.
    pub burnin_satisfied: Option<bool>,
    /// The test direction lies entirely in the null space of the information
    /// matrix, so the pseudo-inverse width degenerates to zero.
    pub null_space_warning: bool,
}

/// `γ(d) = d + ln(6(2+t_eff)/δ)`.
pub fn gamma_d(params: &ConfidenceParams) -> f64 {
    params.d as f64 + (6.0 * (2.0 + params.t_eff as f64) / params.delta).ln()
}

/// `ξ²_t = max_s ‖x_s‖²_{H⁺}` over the design arms.
pub fn xi_sq(arms: &[ArmVector], h: &FisherMatrix) -> f64 {
    let solver = PsdSolver::new(&h.entries);
    xi_sq_with(arms, &solver)
}

fn xi_sq_with(arms: &[ArmVector], solver: &PsdSolver) -> f64 {
    arms.iter().map(|x| solver.quad_form(x.coords())).fold(0.0, f64::max)
}

/// Theorem-1 width around `xᵀθ̂`. `empirical = false` expects `H` at `θ*`
/// (constant 3.5); `empirical = true` expects `H` at `θ̂` (constant 5.2).
/// When `design_arms` is given, the burn-in condition `ξ² ≤ 1/γ(d)` is
/// evaluated against the same matrix.
pub fn width_thm1(
    x: &ArmVector,
    h: &FisherMatrix,
    params: &ConfidenceParams,
    empirical: bool,
    design_arms: Option<&[ArmVector]>,
) -> WidthReport {
    let solver = PsdSolver::new(&h.entries);
    let quad = solver.quad_form(x.coords());
    let constant = if empirical { WIDTH_CONST_EMPIRICAL } else { WIDTH_CONST_TRUE };
    let log_term = (2.0 * (2.0 + params.t_eff as f64) / params.delta).ln();
    let half_width = constant * quad.sqrt() * log_term.sqrt();
    let burnin = design_arms.map(|arms| xi_sq_with(arms, &solver) <= 1.0 / gamma_d(params));
    let null_space = x.norm() > 0.0 && !solver.in_span(x.coords()) && quad == 0.0;
    WidthReport {
        center: x.dot_theta(&h.at_theta),
        half_width,
        bound_family: if empirical { BoundFamily::Thm1Empirical } else { BoundFamily::Thm1True },
        burnin_satisfied: burnin,
        null_space_warning: null_space,
    }
}

/// The `κ⁻¹`-inflated comparison width `(1/κ)‖x‖_{V⁺}√(ln(1/δ))` built on the
/// unweighted Gram matrix. Constant 1: only ratios against the Theorem-1
/// width are meaningful.
pub fn width_li17(
    x: &ArmVector,
    v: &nalgebra::DMatrix<f64>,
    kappa: f64,
    delta: f64,
) -> Result<WidthReport> {
    if kappa <= 0.0 {
        return Err(Error::InvalidConfig("kappa must be positive".into()));
    }
    let solver = PsdSolver::new(v);
    let quad = solver.quad_form(x.coords());
    Ok(WidthReport {
        center: 0.0,
        half_width: (1.0 / kappa) * quad.sqrt() * (1.0 / delta).ln().sqrt(),
        bound_family: BoundFamily::Li17,
        burnin_satisfied: None,
        null_space_warning: x.norm() > 0.0 && quad == 0.0,
    })
}

/// `Γ_T(δ) = 3√(2S*+1)·(√d·ln(T(2S*+1)/(2d)) + √(ln(1/δ)))`, the regularised
/// anytime radius multiplier. Requires `t ≥ 4d`.
pub fn gamma_faury(d: usize, t: u64, s_star: f64, delta: f64) -> Result<f64> {
    if t < 4 * d as u64 {
        return Err(Error::TooFewSamples { needed: 4 * d as u64, got: t });
    }
    let df = d as f64;
    Ok(3.0
        * (2.0 * s_star + 1.0).sqrt()
        * (df.sqrt() * (t as f64 * (2.0 * s_star + 1.0) / (2.0 * df)).ln()
            + (1.0 / delta).ln().sqrt()))
}

/// Anytime comparison width `(2+4S*)·Γ_T(δ)·‖x‖_{H_reg⁻¹}`; `h_reg` must
/// already include the ridge `ηI` with `η = (d+ln(1/δ))/(S*+1/2)`.
pub fn width_faury(
    x: &ArmVector,
    h_reg: &FisherMatrix,
    s_star: f64,
    t: u64,
    delta: f64,
) -> Result<WidthReport> {
    let gamma = gamma_faury(h_reg.dim(), t, s_star, delta)?;
    let solver = PsdSolver::new(&h_reg.entries);
    let quad = solver.quad_form(x.coords());
    Ok(WidthReport {
        center: x.dot_theta(&h_reg.at_theta),
        half_width: (2.0 + 4.0 * s_star) * gamma * quad.sqrt(),
        bound_family: BoundFamily::FauryAnytime,
        burnin_satisfied: None,
        null_space_warning: false,
    })
}

/// The ridge strength used alongside the anytime width.
pub fn faury_eta(d: usize, s_star: f64, delta: f64) -> f64 {
    (d as f64 + (1.0 / delta).ln()) / (s_star + 0.5)
}

/// A fixed design given as `(arm, pull count)` pairs.
pub type FixedDesign = [(ArmVector, u64)];

/// Outcome of the Monte-Carlo coverage experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverageReport {
    /// Fraction of replicates where the 3.5-width (true-variance) event failed.
    pub failure_rate_true: f64,
    /// Fraction of replicates where the 5.2-width (empirical) event failed.
    pub failure_rate_empirical: f64,
    /// Fraction of replicates where the √2.2 variance sandwich held at the
    /// test direction.
    pub var_event_rate: f64,
    /// Whether the supplied design met the burn-in condition at `θ*`; the run
    /// proceeds either way since probing the condition is the experiment's
    /// point.
    pub burnin_satisfied: bool,
    pub reps: u64,
}

/// Simulates `reps` independent fixed-design datasets, fits the MLE on each
/// and records the Theorem-1 events for the test direction `x`.
///
/// Replicate `r` draws its labels from the keyed stream `(seed, r)`, so the
/// result is independent of evaluation order; identical inputs give
/// bit-identical output.
pub fn coverage_monte_carlo(
    design: &FixedDesign,
    theta_star: &Theta,
    x: &ArmVector,
    delta: f64,
    reps: u64,
    seed: u64,
) -> Result<CoverageReport> {
    if reps == 0 {
        return Err(Error::InvalidConfig("reps must be positive".into()));
    }
    if design.is_empty() {
        return Err(Error::InvalidInstance("empty design".into()));
    }
    let d = design[0].0.dim();
    let t_eff = design.iter().filter(|(_, c)| *c > 0).count();
    let params = ConfidenceParams::new(delta, t_eff, d)?;

    // The design is fixed, so H(θ*) and the true width are shared by all
    // replicates.
    let mut base = LogisticDataset::new();
    for (arm, count) in design.iter() {
        base.push_group(arm.clone(), *count, 0)?;
    }
    let h_star = fisher_info(&base, theta_star)?;
    let star_solver = PsdSolver::new(&h_star.entries);
    let quad_star = star_solver.quad_form(x.coords());
    let log_term = (2.0 * (2.0 + t_eff as f64) / delta).ln();
    let width_true = WIDTH_CONST_TRUE * quad_star.sqrt() * log_term.sqrt();
    let design_arms: Vec<ArmVector> = design.iter().map(|(a, _)| a.clone()).collect();
    let burnin_ok = xi_sq_with(&design_arms, &star_solver) <= 1.0 / gamma_d(&params);

    let truth = x.dot_theta(theta_star);
    let mut fail_true = 0u64;
    let mut fail_emp = 0u64;
    let mut var_ok = 0u64;
    for rep in 0..reps {
        let mut env = BernoulliEnv::new(theta_star.clone(), derive_seed(seed, rep));
        let mut ds = LogisticDataset::new();
        for (arm, count) in design.iter() {
            let mut ones = 0u64;
            for _ in 0..*count {
                ones += u64::from(env.sample(arm));
            }
            ds.push_group(arm.clone(), *count, ones)?;
        }
        let fit = fit_mle(&ds, MleOptions::default())?;
        if fit.separation_detected {
            // Count a divergent replicate against every event.
            fail_true += 1;
            fail_emp += 1;
            continue;
        }
        let err = (x.dot_theta(&fit.theta) - truth).abs();
        if err > width_true {
            fail_true += 1;
        }
        let h_hat = fisher_info(&ds, &fit.theta)?;
        let quad_hat = PsdSolver::new(&h_hat.entries).quad_form(x.coords());
        let width_emp = WIDTH_CONST_EMPIRICAL * quad_hat.sqrt() * log_term.sqrt();
        if err > width_emp {
            fail_emp += 1;
        }
        let lo = quad_star / VAR_EVENT_FACTOR;
        let hi = quad_star * VAR_EVENT_FACTOR;
        if quad_hat >= lo && quad_hat <= hi {
            var_ok += 1;
        }
    }
    Ok(CoverageReport {
        failure_rate_true: fail_true as f64 / reps as f64,
        failure_rate_empirical: fail_emp as f64 / reps as f64,
        var_event_rate: var_ok as f64 / reps as f64,
        burnin_satisfied: burnin_ok,
        reps,
    })
}

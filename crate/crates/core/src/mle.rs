//! Maximum-likelihood estimation for the linear logistic model.
//!
//! The solver is a damped Newton method (step halving until the likelihood
//! increases) started from zero. Zero initialisation keeps the iterates inside
//! the span of the data, so directions the dataset cannot identify stay at
//! zero. Likelihood terms are evaluated through `softplus`, so nothing
//! overflows even at extreme scores.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::linalg::PsdSolver;
use crate::link::{mu, mu_ddot, mu_dot, softplus};
use crate::types::{fisher_info, LogisticDataset, MleEstimate, Theta};
use crate::{Error, Result};

/// Solver options for [`fit_mle`].
#[derive(Debug, Clone, Copy)]
pub struct MleOptions {
    /// Convergence tolerance on the gradient ∞-norm.
    pub tol: f64,
    pub max_iters: usize,
    /// ‖θ‖ beyond which an unconverged fit is flagged as (quasi-)separated.
    pub separation_guard: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions { tol: 1e-10, max_iters: 100, separation_guard: 50.0 }
    }
}

/// Log-likelihood `Σ y log μ + (1-y) log(1-μ)` on grouped data.
///
/// Per distinct arm with `c` pulls and `s` successes at score `z`:
/// `s·z - c·softplus(z)`.
pub fn log_likelihood(data: &LogisticDataset, theta: &Theta) -> Result<f64> {
    let mut ll = 0.0;
    for (arm, count, successes) in data.groups() {
        let z = arm.dot_theta(theta);
        ll += successes as f64 * z - count as f64 * softplus(z);
    }
    if ll.is_finite() {
        Ok(ll)
    } else {
        Err(Error::NonFiniteLikelihood)
    }
}

/// Gradient `Σ (y_s - μ(x_sᵀθ)) x_s` on grouped data.
fn gradient(data: &LogisticDataset, theta: &Theta) -> DVector<f64> {
    let d = theta.dim();
    let mut g = DVector::zeros(d);
    for (arm, count, successes) in data.groups() {
        let r = successes as f64 - count as f64 * mu(arm.dot_theta(theta));
        g.axpy(r, arm.coords(), 1.0);
    }
    g
}

/// Unregularised MLE via damped Newton from zero.
pub fn fit_mle(data: &LogisticDataset, opts: MleOptions) -> Result<MleEstimate> {
    fit_ridge(data, 0.0, opts)
}

/// True when the fit reproduces every group's empirical mean to within an
/// absolute count residual of 1e-6 while sitting far out in parameter space.
/// On (quasi-)separated data the Newton path diverges but the gradient
/// underflows any fixed tolerance once scores saturate (μ(z) rounds to the
/// label at z ≈ ln(t/tol)), so a norm guard alone can never fire; this is the
/// complementary detector for that regime.
fn saturated_perfect_fit(data: &LogisticDataset, theta: &Theta) -> bool {
    const SATURATION_NORM: f64 = 20.0;
    if theta.norm() < SATURATION_NORM {
        return false;
    }
    data.groups().all(|(arm, count, successes)| {
        (successes as f64 - count as f64 * mu(arm.dot_theta(theta))).abs() <= 1e-6
    })
}

/// Ridge-penalised MLE: maximises `loglik(θ) - (η/2)‖θ‖²`.
///
/// With `eta = 0` this is the plain MLE. The Newton direction uses the
/// pseudo-inverse of `H_t(θ) + ηI`, so rank-deficient designs stay confined to
/// the span of the data.
pub fn fit_ridge(data: &LogisticDataset, eta: f64, opts: MleOptions) -> Result<MleEstimate> {
    let d = data.dim().ok_or_else(|| Error::InvalidInstance("empty dataset".into()))?;
    let mut theta = Theta::zeros(d);
    let penalised = |t: &Theta| -> Result<f64> {
        Ok(log_likelihood(data, t)? - 0.5 * eta * t.norm() * t.norm())
    };
    let mut obj = penalised(&theta)?;
    let mut grad_inf = f64::INFINITY;
    let mut separation = false;
    let mut iters = 0;

    for iter in 0..opts.max_iters {
        iters = iter;
        let mut g = gradient(data, &theta);
        if eta > 0.0 {
            g.axpy(-eta, theta.coords(), 1.0);
        }
        grad_inf = g.amax();
        if !grad_inf.is_finite() {
            return Err(Error::NonFiniteLikelihood);
        }
        if grad_inf <= opts.tol {
            break;
        }
        if theta.norm() > opts.separation_guard {
            separation = true;
            break;
        }

        let mut h = fisher_info(data, &theta)?.entries;
        if eta > 0.0 {
            for i in 0..d {
                h[(i, i)] += eta;
            }
        }
        let step = PsdSolver::new(&h).solve(&g);

        // Step halving keeps the ascent monotone.
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = Theta::from_vector(theta.coords() + scale * &step);
            let cand_obj = penalised(&cand)?;
            if cand_obj > obj {
                theta = cand;
                obj = cand_obj;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            // No ascent direction left at double precision.
            break;
        }
    }

    let converged = grad_inf <= opts.tol;
    if !converged && theta.norm() > opts.separation_guard {
        separation = true;
    }
    if eta == 0.0 && saturated_perfect_fit(data, &theta) {
        separation = true;
    }
    Ok(MleEstimate {
        theta,
        converged,
        iterations: iters,
        final_gradient_norm: grad_inf,
        separation_detected: separation,
    })
}

/// Norm-projected estimator: an η-ridge MLE followed by minimisation of
/// `‖g_t(θ) - g_t(θ̂^MLE)‖_{H_t(η,θ)^{-1}}` over the ball `‖θ‖ ≤ S*`,
/// where `g_t(θ) = Σ μ(x_sᵀθ) x_s + ηθ`.
///
/// The projection runs projected gradient descent with backtracking; the
/// returned parameter carries `norm_bound = s_star`.
pub fn fit_projected_mle(data: &LogisticDataset, eta: f64, s_star: f64) -> Result<MleEstimate> {
    if eta <= 0.0 {
        return Err(Error::InvalidConfig("eta must be positive".into()));
    }
    if s_star <= 0.0 {
        return Err(Error::InvalidConfig("s_star must be positive".into()));
    }
    let ridge = fit_ridge(data, eta, MleOptions { tol: 1e-10, ..MleOptions::default() })?;
    let d = ridge.theta.dim();

    if ridge.theta.norm() <= s_star {
        // Feasible point with objective exactly zero.
        return Ok(MleEstimate {
            theta: ridge.theta.with_norm_bound(s_star)?,
            separation_detected: false,
            ..ridge
        });
    }

    let g_of = |t: &DVector<f64>| -> DVector<f64> {
        let mut g = DVector::zeros(d);
        for (arm, count, _) in data.groups() {
            g.axpy(count as f64 * mu(arm.coords().dot(t)), arm.coords(), 1.0);
        }
        g.axpy(eta, t, 1.0);
        g
    };
    let h_of = |t: &DVector<f64>| -> DMatrix<f64> {
        let mut h = DMatrix::zeros(d, d);
        for (arm, count, _) in data.groups() {
            h.ger(count as f64 * mu_dot(arm.coords().dot(t)), arm.coords(), arm.coords(), 1.0);
        }
        for i in 0..d {
            h[(i, i)] += eta;
        }
        h
    };
    let g_ref = g_of(ridge.theta.coords());

    // F(θ) = rᵀ W(θ)⁻¹ r with r = g(θ) - g_ref and W = H + ηI.
    // ∇F = 2r - Σ_s c_s μ̈(x_sᵀθ)(x_sᵀ W⁻¹ r)² x_s  (∇g = W cancels one W⁻¹).
    let objective_grad = |t: &DVector<f64>| -> (f64, DVector<f64>) {
        let r = g_of(t) - &g_ref;
        let w = h_of(t);
        let u = PsdSolver::new(&w).solve(&r);
        let val = r.dot(&u);
        let mut grad = 2.0 * &r;
        for (arm, count, _) in data.groups() {
            let z = arm.coords().dot(t);
            let xu = arm.coords().dot(&u);
            grad.axpy(-(count as f64) * mu_ddot(z) * xu * xu, arm.coords(), 1.0);
        }
        (val, grad)
    };
    let project = |t: &DVector<f64>| -> DVector<f64> {
        let n = t.norm();
        if n > s_star {
            t * (s_star / n)
        } else {
            t.clone()
        }
    };

    let mut x = project(ridge.theta.coords());
    let (mut fx, mut grad) = objective_grad(&x);
    let mut step = 1.0 / (1.0 + grad.norm());
    let tol = 1e-8;
    let max_iters = 500;
    let mut iters = 0;
    let mut converged = false;
    for it in 0..max_iters {
        iters = it;
        let mut moved = false;
        for _ in 0..50 {
            let cand = project(&(&x - step * &grad));
            let move_norm = (&cand - &x).norm();
            if move_norm <= tol {
                converged = true;
                break;
            }
            let (fc, gc) = objective_grad(&cand);
            if fc < fx {
                x = cand;
                fx = fc;
                grad = gc;
                step *= 1.5;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if converged || !moved {
            converged = converged || !moved;
            break;
        }
    }

    let residual = {
        let probe = project(&(&x - step * &grad));
        (&probe - &x).norm()
    };
    let constraint_ok = x.norm() <= s_star + crate::types::NORM_SLACK;
    Ok(MleEstimate {
        theta: Theta::from_vector(x).with_norm_bound(s_star * (1.0 + 1e-12))?,
        converged: converged && constraint_ok,
        iterations: iters,
        final_gradient_norm: residual,
        separation_detected: false,
    })
}

/// Per-iteration ascent audit used by tests: runs the damped Newton loop and
/// returns the objective value after every accepted step.
pub fn newton_objective_trace(data: &LogisticDataset, opts: MleOptions) -> Result<Vec<f64>> {
    let d = data.dim().ok_or_else(|| Error::InvalidInstance("empty dataset".into()))?;
    let mut theta = Theta::zeros(d);
    let mut trace = Vec::new();
    let mut obj = log_likelihood(data, &theta)?;
    trace.push(obj);
    for _ in 0..opts.max_iters {
        let g = gradient(data, &theta);
        if g.amax() <= opts.tol || theta.norm() > opts.separation_guard {
            break;
        }
        let h = fisher_info(data, &theta)?.entries;
        let step = PsdSolver::new(&h).solve(&g);
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = Theta::from_vector(theta.coords() + scale * &step);
            let cand_obj = log_likelihood(data, &cand)?;
            if cand_obj > obj {
                theta = cand;
                obj = cand_obj;
                trace.push(obj);
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ArmVector;

    #[test]
    fn symmetric_labels_give_zero_score() {
        // {(e1,1),(e1,0)} repeated: empirical mean 1/2, so e1ᵀθ̂ = 0; the
        // unidentified e2 direction stays at zero by zero-initialisation.
        let e1 = ArmVector::basis(2, 0);
        let mut ds = LogisticDataset::new();
        for _ in 0..10 {
            ds.push(e1.clone(), 1).unwrap();
            ds.push(e1.clone(), 0).unwrap();
        }
        let fit = fit_mle(&ds, MleOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.theta.coords()[0].abs() < 1e-12);
        assert_eq!(fit.theta.coords()[1], 0.0);
    }

    #[test]
    fn all_ones_single_arm_detects_separation() {
        let e1 = ArmVector::basis(1, 0);
        let mut ds = LogisticDataset::new();
        for _ in 0..8 {
            ds.push(e1.clone(), 1).unwrap();
        }
        let fit = fit_mle(&ds, MleOptions::default()).unwrap();
        assert!(fit.separation_detected);
        assert!(fit.theta.norm() > 10.0);
    }

    #[test]
    fn likelihood_trace_is_monotone() {
        let mut stream = crate::rng::KeyedStream::new(9);
        let theta_star = Theta::new(vec![1.0, -0.5, 0.3]);
        let mut ds = LogisticDataset::new();
        for _ in 0..300 {
            let x = ArmVector::new(vec![
                stream.next_u01() - 0.5,
                stream.next_u01() - 0.5,
                stream.next_u01() - 0.5,
            ])
            .unwrap();
            let y = u8::from(stream.next_u01() < mu(x.dot_theta(&theta_star)));
            ds.push(x, y).unwrap();
        }
        let trace = newton_objective_trace(&ds, MleOptions::default()).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] > w[0], "ascent must be strict: {w:?}");
        }
    }

    #[test]
    fn recovers_parameter_on_seeded_design() {
        // Monte-Carlo oracle, seed-fixed: 5000 samples from θ*=(1,-0.5) on a
        // balanced two-point design. Tolerance = 3σ of the asymptotic
        // covariance trace, computed numerically below; 0.15 is the frozen
        // spec-level cap.
        let theta_star = Theta::new(vec![1.0, -0.5]);
        let arms = [ArmVector::basis(2, 0), ArmVector::basis(2, 1)];
        let mut env = crate::env::BernoulliEnv::new(theta_star.clone(), 20240_1);
        let mut ds = LogisticDataset::new();
        use crate::env::RewardSampler;
        for i in 0..5000u64 {
            let arm = &arms[(i % 2) as usize];
            let y = env.sample(arm);
            ds.push(arm.clone(), y).unwrap();
        }
        let fit = fit_mle(&ds, MleOptions::default()).unwrap();
        assert!(fit.converged);
        let err = (fit.theta.coords() - theta_star.coords()).norm();

        let h = fisher_info(&ds, &theta_star).unwrap().entries;
        let sigma = PsdSolver::new(&h).pinv().trace().sqrt();
        assert!(err <= 3.0 * sigma, "err {err} vs 3σ {}", 3.0 * sigma);
        assert!(err <= 0.15, "err {err}");
    }

    #[test]
    fn ridge_removes_separation() {
        let e1 = ArmVector::basis(1, 0);
        let mut ds = LogisticDataset::new();
        for _ in 0..8 {
            ds.push(e1.clone(), 1).unwrap();
        }
        let fit = fit_projected_mle(&ds, 1.0, 10.0).unwrap();
        assert!(!fit.separation_detected);
        assert!(fit.theta.norm() < 10.0);
    }

    #[test]
    fn projection_identity_inside_ball() {
        let mut stream = crate::rng::KeyedStream::new(33);
        let theta_star = Theta::new(vec![0.4, -0.1]);
        let mut ds = LogisticDataset::new();
        for _ in 0..200 {
            let x = ArmVector::new(vec![stream.next_u01() - 0.5, stream.next_u01() - 0.5]).unwrap();
            let y = u8::from(stream.next_u01() < mu(x.dot_theta(&theta_star)));
            ds.push(x, y).unwrap();
        }
        let eta = 0.7;
        let ridge = fit_ridge(&ds, eta, MleOptions::default()).unwrap();
        assert!(ridge.theta.norm() < 5.0);
        let proj = fit_projected_mle(&ds, eta, 5.0).unwrap();
        assert!((proj.theta.coords() - ridge.theta.coords()).norm() <= 1e-8);
    }

    #[test]
    fn projection_beats_random_feasible_points() {
        // Random-probe oracle: the returned point's objective is no worse
        // than 20 random feasible candidates.
        let e1 = ArmVector::basis(2, 0);
        let mut ds = LogisticDataset::new();
        for _ in 0..30 {
            ds.push(e1.clone(), 1).unwrap();
        }
        ds.push(ArmVector::basis(2, 1), 0).unwrap();
        let eta = 0.05;
        let s_star = 0.8;
        let proj = fit_projected_mle(&ds, eta, s_star).unwrap();

        let objective = |t: &DVector<f64>| -> f64 {
            let mut gt = DVector::zeros(2);
            for (arm, count, _) in ds.groups() {
                gt.axpy(count as f64 * mu(arm.coords().dot(t)), arm.coords(), 1.0);
            }
            gt.axpy(eta, t, 1.0);
            let ridge = fit_ridge(&ds, eta, MleOptions::default()).unwrap();
            let mut gref = DVector::zeros(2);
            for (arm, count, _) in ds.groups() {
                gref.axpy(count as f64 * mu(arm.coords().dot(ridge.theta.coords())), arm.coords(), 1.0);
            }
            gref.axpy(eta, ridge.theta.coords(), 1.0);
            let r = gt - gref;
            let mut w = DMatrix::zeros(2, 2);
            for (arm, count, _) in ds.groups() {
                w.ger(count as f64 * mu_dot(arm.coords().dot(t)), arm.coords(), arm.coords(), 1.0);
            }
            w[(0, 0)] += eta;
            w[(1, 1)] += eta;
            r.dot(&PsdSolver::new(&w).solve(&r))
        };

        let ours = objective(proj.theta.coords());
        let mut stream = crate::rng::KeyedStream::new(55);
        for _ in 0..20 {
            let raw = DVector::from_vec(vec![
                2.0 * (stream.next_u01() - 0.5),
                2.0 * (stream.next_u01() - 0.5),
            ]);
            let cand = if raw.norm() > s_star { &raw * (s_star / raw.norm()) } else { raw };
            assert!(ours <= objective(&cand) + 1e-9);
        }
    }
}

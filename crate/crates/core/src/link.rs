//! Logistic link primitives: `μ`, its derivatives, secant slopes, and the
//! integral weight `β` behind the Bernoulli KL quadratic form.

#[allow(unused_imports)]
use num_traits::Float;

use crate::types::{ArmVector, Theta};
use crate::{Error, Result};

/// `ln(1 + e^z)`, stable over the whole real line.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z + (-z).exp()
    } else if z < -30.0 {
        z.exp()
    } else {
        z.exp().ln_1p()
    }
}

/// The logistic link `μ(z) = 1/(1 + e^{-z})`, computed via the branch that
/// avoids overflow for |z| up to and beyond 700.
#[inline]
pub fn mu(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// First derivative `μ̇(z) = μ(z)(1 - μ(z))`, even in `z`, maximal at 0.
#[inline]
pub fn mu_dot(z: f64) -> f64 {
    // μ(z)(1-μ(z)) = μ(|z|)·μ(-|z|); evaluating at -|z| keeps both factors
    // well scaled so the product underflows only around |z| ≈ 745.
    let a = z.abs();
    mu(a) * mu(-a)
}

/// Second derivative `μ̈(z) = μ̇(z)(1 - 2μ(z))`.
#[inline]
pub fn mu_ddot(z: f64) -> f64 {
    mu_dot(z) * (1.0 - 2.0 * mu(z))
}

/// Secant slope of `μ` between two scalar scores, with the `μ̇` limit when the
/// scores coincide to within 1e-10.
#[inline]
pub fn alpha_scalar(z1: f64, z2: f64) -> f64 {
    if (z1 - z2).abs() < 1e-10 {
        mu_dot(z2)
    } else {
        (mu(z1) - mu(z2)) / (z1 - z2)
    }
}

/// Secant slope `α(x, θ1, θ2) = (μ(xᵀθ1) - μ(xᵀθ2)) / xᵀ(θ1 - θ2)`.
///
/// Near-coincident scores fall back to the limit `μ̇(xᵀθ2)`; the 1e-10
/// threshold keeps the relative error of the ratio below 1e-8.
pub fn alpha_slope(x: &ArmVector, theta1: &Theta, theta2: &Theta) -> f64 {
    alpha_scalar(x.dot_theta(theta1), x.dot_theta(theta2))
}

/// `β(a,b) = ∫₀¹ (1-t) μ̇(a + t(b-a)) dt`, via its closed form
/// `(softplus(b) - softplus(a))/(b-a)² - μ(a)/(b-a)`
/// when |b-a| ≥ 1e-6, and the limit `μ̇(a)/2` below that.
///
/// Integrating by parts with `∫μ = softplus` gives the closed form above;
/// swapping the arguments yields the t-weighted integral
/// `∫₀¹ t μ̇(a + t(b-a)) dt`, which is the form some derivations display.
/// This weight makes `(b-a)²·β(a,b)` exactly the Bernoulli KL between the
/// score-`a` and score-`b` distributions (see `bounds::kl_bernoulli_logistic`).
pub fn beta_weight(a: f64, b: f64) -> f64 {
    let h = b - a;
    if h.abs() < 1e-6 {
        return mu_dot(a) / 2.0;
    }
    (softplus(b) - softplus(a)) / (h * h) - mu(a) / h
}

/// Scalar version of the paper's `β(x, θ1, θ2)` weight: `β(xᵀθ1, xᵀθ2)`.
pub fn beta_slope(x: &ArmVector, theta1: &Theta, theta2: &Theta) -> f64 {
    beta_weight(x.dot_theta(theta1), x.dot_theta(theta2))
}

/// Where the minimum of `μ̇(xᵀθ)` is taken.
pub enum KappaDomain<'a> {
    /// Over a finite arm set.
    Arms(&'a [ArmVector]),
    /// Over the whole unit ball; the minimum is `μ̇(‖θ‖)` since `μ̇` is even
    /// and decreasing in |z|.
    UnitBall,
}

/// Smallest link derivative over the given domain: `κ` (unit ball) or `κ₀`
/// (finite set).
pub fn kappa_min(domain: KappaDomain<'_>, theta: &Theta) -> Result<f64> {
    match domain {
        KappaDomain::UnitBall => Ok(mu_dot(theta.norm())),
        KappaDomain::Arms(arms) => {
            if arms.is_empty() {
                return Err(Error::InvalidInstance("kappa_min over an empty arm set".into()));
            }
            let mut best = f64::INFINITY;
            for x in arms {
                let v = mu_dot(x.dot_theta(theta));
                if v < best {
                    best = v;
                }
            }
            Ok(best)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ArmVector, Theta};
    use approx::assert_abs_diff_eq;

    #[test]
    fn mu_symmetry_and_anchors() {
        assert_abs_diff_eq!(mu(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(mu(3f64.ln()), 0.75, epsilon = 1e-15);
        for &z in &[-700.0, -5.0, -0.3, 0.0, 1.7, 20.0, 700.0] {
            assert!((mu(z) + mu(-z) - 1.0).abs() <= 1e-15, "z={z}");
            assert!(mu(z).is_finite() && (0.0..=1.0).contains(&mu(z)));
        }
        // Strictly interior wherever doubles can represent it.
        for &z in &[-30.0, -5.0, 0.0, 5.0, 30.0] {
            assert!(mu(z) > 0.0 && mu(z) < 1.0);
        }
    }

    #[test]
    fn mu_dot_anchors_and_evenness() {
        assert_abs_diff_eq!(mu_dot(0.0), 0.25, epsilon = 1e-16);
        for &z in &[0.1, 1.0, 3.5, 10.0] {
            assert!((mu_dot(z) - mu_dot(-z)).abs() <= 1e-15);
            assert!(mu_dot(z) < mu_dot(z * 0.5));
        }
    }

    #[test]
    fn mu_dot_matches_central_difference() {
        // Central-difference oracle at h = 1e-5.
        let h = 1e-5;
        for &z in &[-3.0, 0.0, 2.0] {
            let fd = (mu(z + h) - mu(z - h)) / (2.0 * h);
            assert!((fd - mu_dot(z)).abs() < 1e-6, "z={z}");
        }
    }

    #[test]
    fn alpha_limit_and_symmetric_pair() {
        let x = ArmVector::new(vec![1.0]).unwrap();
        let t1 = Theta::new(vec![0.7]);
        assert_abs_diff_eq!(alpha_slope(&x, &t1, &t1), mu_dot(0.7), epsilon = 1e-15);
        let a = 1.3;
        let ta = Theta::new(vec![a]);
        let tb = Theta::new(vec![-a]);
        let expect = (mu(a) - mu(-a)) / (2.0 * a);
        assert_abs_diff_eq!(alpha_slope(&x, &ta, &tb), expect, epsilon = 1e-15);
    }

    #[test]
    fn alpha_sandwich_on_grid() {
        // μ̇(b)(1-e^{-D})/D ≤ α(a,b) ≤ μ̇(b)(e^D-1)/D with D = |a-b|.
        let mut a = -3.0;
        while a <= 3.0 {
            let mut b = -3.0;
            while b <= 3.0 {
                if (a - b).abs() > 1e-9 {
                    let d = (a - b).abs();
                    let alpha = alpha_scalar(a, b);
                    let lo = mu_dot(b) * (1.0 - (-d).exp()) / d;
                    let hi = mu_dot(b) * (d.exp() - 1.0) / d;
                    assert!(alpha >= lo - 1e-12 && alpha <= hi + 1e-12, "a={a} b={b}");
                }
                b += 0.25;
            }
            a += 0.25;
        }
    }

    #[test]
    fn beta_at_origin_and_positivity() {
        assert_abs_diff_eq!(beta_weight(0.0, 0.0), 0.125, epsilon = 1e-15);
        for &(a, b) in &[(-2.0, 1.0), (0.0, 3.0), (5.0, 5.0), (-4.0, -4.5)] {
            assert!(beta_weight(a, b) > 0.0);
        }
    }

    #[test]
    fn beta_matches_trapezoid_quadrature() {
        // 1e4-point trapezoid oracle for ∫₀¹ (1-t) μ̇(a+t(b-a)) dt.
        let quad = |a: f64, b: f64| {
            let n = 10_000usize;
            let mut acc = 0.0;
            for i in 0..=n {
                let t = i as f64 / n as f64;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                acc += w * (1.0 - t) * mu_dot(a + t * (b - a));
            }
            acc / n as f64
        };
        for &(a, b) in &[(-2.0, 1.0), (0.0, 3.0)] {
            assert!((beta_weight(a, b) - quad(a, b)).abs() < 1e-8, "({a},{b})");
        }
    }

    #[test]
    fn kappa_min_modes() {
        let zero = Theta::new(vec![0.0, 0.0]);
        assert_abs_diff_eq!(kappa_min(KappaDomain::UnitBall, &zero).unwrap(), 0.25, epsilon = 1e-15);
        let s = 1.7;
        let t = Theta::new(vec![s, 0.0]);
        assert_abs_diff_eq!(kappa_min(KappaDomain::UnitBall, &t).unwrap(), mu_dot(s), epsilon = 1e-15);

        // Finite set: enumerate both arms.
        let arms = vec![
            ArmVector::new(vec![1.0, 0.0]).unwrap(),
            ArmVector::new(vec![0.0, 1.0]).unwrap(),
        ];
        let theta = Theta::new(vec![2.0, 0.0]);
        let k = kappa_min(KappaDomain::Arms(&arms), &theta).unwrap();
        assert_abs_diff_eq!(k, mu_dot(2.0), epsilon = 1e-15);
        assert!(kappa_min(KappaDomain::Arms(&[]), &theta).is_err());
    }
}

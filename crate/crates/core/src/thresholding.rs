//! Threshold rules and their induced sparsity penalties.
//!
//! A threshold rule `Theta(t; lambda)` is an odd, monotone, unbounded
//! shrinkage rule. Each rule induces a penalty
//! `P(t; lambda) = integral_0^|t| (sup{ u : Theta(u; lambda) <= v } - v) dv`,
//! which is what the solvers' objective monitors evaluate. Only the hard rule
//! ships; the enum leaves room for soft/SCAD rules without an API change.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Family of threshold rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdRule {
    #[default]
    Hard,
}

impl ThresholdRule {
    /// Apply the rule at level `lambda`.
    pub fn apply(self, t: f64, lambda: f64) -> Result<f64> {
        match self {
            ThresholdRule::Hard => hard_threshold(t, lambda),
        }
    }

    /// Induced penalty of the rule at level `lambda`.
    pub fn penalty(self, t: f64, lambda: f64) -> Result<f64> {
        match self {
            ThresholdRule::Hard => hard_penalty(t, lambda),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "threshold level must be a finite nonnegative scalar, got {lambda}"
        )));
    }
    Ok(())
}

/// Hard thresholding: 0 when `|t| <= lambda`, `t` otherwise.
pub fn hard_threshold(t: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(hard_threshold_unchecked(t, lambda))
}

/// Hot-path variant; `lambda` must already be validated nonnegative.
#[inline]
pub(crate) fn hard_threshold_unchecked(t: f64, lambda: f64) -> f64 {
    if t.abs() <= lambda {
        0.0
    } else {
        t
    }
}

/// Element-wise hard thresholding with a shared level.
pub fn hard_threshold_vec(v: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    check_lambda(lambda)?;
    Ok(v.map(|t| hard_threshold_unchecked(t, lambda)))
}

/// Element-wise hard thresholding with one level per position.
pub fn hard_threshold_vec_elementwise(
    v: &DVector<f64>,
    lambdas: &DVector<f64>,
) -> Result<DVector<f64>> {
    if v.len() != lambdas.len() {
        return Err(Error::DimensionMismatch(format!(
            "vector has {} entries but {} threshold levels were given",
            v.len(),
            lambdas.len()
        )));
    }
    for &l in lambdas.iter() {
        check_lambda(l)?;
    }
    Ok(DVector::from_iterator(
        v.len(),
        v.iter()
            .zip(lambdas.iter())
            .map(|(&t, &l)| hard_threshold_unchecked(t, l)),
    ))
}

/// Penalty induced by the hard rule.
///
/// For hard thresholding the integrand is `max(lambda - v, 0)`, so the
/// closed form is `lambda*|t| - t^2/2` for `|t| <= lambda` and `lambda^2/2`
/// beyond. The optional `q` term of the general construction is taken as
/// identically zero.
pub fn hard_penalty(t: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(hard_penalty_unchecked(t, lambda))
}

#[inline]
pub(crate) fn hard_penalty_unchecked(t: f64, lambda: f64) -> f64 {
    let a = t.abs();
    if a <= lambda {
        lambda * a - 0.5 * a * a
    } else {
        0.5 * lambda * lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Midpoint quadrature of the defining integral; independent of the
    /// closed form it checks.
    fn hard_penalty_by_quadrature(t: f64, lambda: f64) -> f64 {
        let upper = t.abs();
        let steps = 200_000usize;
        let dv = upper / steps as f64;
        (0..steps)
            .map(|i| {
                let v = (i as f64 + 0.5) * dv;
                (lambda - v).max(0.0) * dv
            })
            .sum()
    }

    #[test]
    fn hard_threshold_scalar_cases() {
        assert_eq!(hard_threshold(0.5, 1.0).unwrap(), 0.0);
        assert_eq!(hard_threshold(2.0, 1.0).unwrap(), 2.0);
        assert_eq!(hard_threshold(-3.0, 0.0).unwrap(), -3.0);
        // Exact boundary falls in the "<=" branch.
        assert_eq!(hard_threshold(1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_lambda_is_rejected() {
        assert!(hard_threshold(1.0, -0.1).is_err());
        assert!(hard_penalty(1.0, -0.1).is_err());
    }

    #[test]
    fn vector_forms() {
        let v = DVector::from_vec(vec![0.5, 2.0]);
        let out = hard_threshold_vec(&v, 1.0).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 2.0]);

        let v = DVector::from_vec(vec![1.0, -1.0]);
        let l = DVector::from_vec(vec![2.0, 0.5]);
        let out = hard_threshold_vec_elementwise(&v, &l).unwrap();
        assert_eq!(out.as_slice(), &[0.0, -1.0]);

        let z = DVector::zeros(4);
        assert_eq!(hard_threshold_vec(&z, 3.0).unwrap(), DVector::zeros(4));

        let bad = hard_threshold_vec_elementwise(&v, &DVector::zeros(3));
        assert!(matches!(bad, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn hard_penalty_values() {
        assert_eq!(hard_penalty(0.0, 1.0).unwrap(), 0.0);
        // Frozen from the quadrature oracle below.
        assert!((hard_penalty(2.0, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((hard_penalty(0.5, 1.0).unwrap() - 0.375).abs() < 1e-12);
        for &(t, l) in &[(2.0, 1.0), (0.5, 1.0), (0.3, 2.5), (7.0, 0.0), (1.0, 1.0)] {
            let closed = hard_penalty(t, l).unwrap();
            let quad = hard_penalty_by_quadrature(t, l);
            assert!(
                (closed - quad).abs() < 1e-6,
                "penalty({t},{l}): closed {closed} vs quadrature {quad}"
            );
        }
    }

    #[test]
    fn minimizer_property_on_grid() {
        // Theta(t; lambda) minimizes g(xi) = (t - xi)^2/2 + P(xi; lambda),
        // checked by grid scan away from the discontinuity |t| = lambda.
        for &lambda in &[0.0, 0.5, 1.0, 5.0] {
            let mut t: f64 = -10.0;
            while t <= 10.0 {
                if (t.abs() - lambda).abs() > 1e-6 {
                    let theta = hard_threshold(t, lambda).unwrap();
                    let g = |xi: f64| 0.5 * (t - xi).powi(2) + hard_penalty_unchecked(xi, lambda);
                    let span = 2.0 * t.abs() + 2.0 * lambda + 1e-3;
                    let mut best = f64::INFINITY;
                    let mut xi = -span;
                    while xi <= span {
                        best = best.min(g(xi));
                        xi += 1e-3;
                    }
                    assert!(
                        g(theta) <= best + 2e-3,
                        "t={t} lambda={lambda}: g(theta)={} grid best={}",
                        g(theta),
                        best
                    );
                }
                t += 0.375;
            }
        }
    }

    proptest! {
        #[test]
        fn odd_monotone_shrinking_idempotent(t in -10.0f64..10.0, s in -10.0f64..10.0,
                                             lambda in 0.0f64..5.0) {
            let th = hard_threshold(t, lambda).unwrap();
            // Odd.
            prop_assert_eq!(hard_threshold(-t, lambda).unwrap(), -th);
            // Shrinkage.
            prop_assert!(th.abs() <= t.abs());
            // Nondecreasing.
            let (lo, hi) = if t <= s { (t, s) } else { (s, t) };
            prop_assert!(hard_threshold(lo, lambda).unwrap() <= hard_threshold(hi, lambda).unwrap());
            // Idempotent.
            prop_assert_eq!(hard_threshold(th, lambda).unwrap(), th);
        }

        #[test]
        fn penalty_is_monotone_in_magnitude(t in -8.0f64..8.0, d in 0.0f64..4.0,
                                            lambda in 0.0f64..5.0) {
            let p0 = hard_penalty(t, lambda).unwrap();
            let bigger = t + t.signum() * d;
            let p1 = hard_penalty(if t == 0.0 { d } else { bigger }, lambda).unwrap();
            prop_assert!(p1 + 1e-12 >= p0);
            prop_assert!(p0 >= 0.0);
        }
    }
}

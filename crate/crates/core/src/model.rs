//! Problem parameters, exponent arithmetic and the penalization `B`, `B_ε`.
//!
//! The penalized equation is `Δ∞u = B_ε(u) u^(−γ)` with `B_ε(s) = B(s/ε^α)`,
//! where `B` vanishes below `δ/2`, equals one above `δ` and ramps in between.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Shape of the penalty ramp on `(δ/2, δ)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    /// `2s/δ − 1`, Lipschitz constant exactly `2/δ`.
    #[default]
    Linear,
    /// `3t² − 2t³` with `t = 2s/δ − 1`, Lipschitz constant `3/δ`.
    Smoothstep,
}

impl RampShape {
    /// Ramp value for `t ∈ [0, 1]`.
    fn profile(self, t: f64) -> f64 {
        match self {
            RampShape::Linear => t,
            RampShape::Smoothstep => t * t * (3.0 - 2.0 * t),
        }
    }

    fn derivative(self, t: f64) -> f64 {
        match self {
            RampShape::Linear => 1.0,
            RampShape::Smoothstep => 6.0 * t * (1.0 - t),
        }
    }

    /// Sup of `d profile / dt` on `[0, 1]`.
    fn max_slope(self) -> f64 {
        match self {
            RampShape::Linear => 1.0,
            RampShape::Smoothstep => 1.5,
        }
    }
}

/// Validated parameters with every derived constant computed once.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProblemParams {
    gamma: f64,
    epsilon: f64,
    delta: f64,
    alpha: f64,
    sigma: f64,
    c_alpha: f64,
    /// `ε^α`
    eps_alpha: f64,
    /// `δε^α/2`, the level below which `B_ε` vanishes.
    dead_level: f64,
    ramp: RampShape,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(domain("gamma", gamma, "0 <= gamma < 1"))
    }
}

fn alpha_of(gamma: f64) -> f64 {
    4.0 / (3.0 + gamma)
}

/// Largest `δ` for which the radial barrier is a supersolution.
///
/// Both barrier inequalities reduce to `8 δ^(3+γ) 2^γ K ≤ 1` with `K = α⁴` on
/// the annulus and `K = α³(α−1)` outside; the annulus binds and gives
/// `δ_max = α^(−α)/2`.
pub fn max_admissible_delta(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let alpha = alpha_of(gamma);
    Ok(0.5 * alpha.powf(-alpha))
}

/// Builds [`ProblemParams`]; `delta_opt = None` selects half the admissible maximum.
pub fn derive_params(gamma: f64, epsilon: f64, delta_opt: Option<f64>) -> Result<ProblemParams> {
    check_gamma(gamma)?;
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(domain("epsilon", epsilon, "epsilon > 0"));
    }
    let delta_max = max_admissible_delta(gamma)?;
    let delta = match delta_opt {
        None => 0.5 * delta_max,
        Some(d) if d.is_finite() && d > 0.0 && d <= delta_max => d,
        Some(d) => {
            return Err(domain(
                "delta",
                d,
                format!("0 < delta <= max_admissible_delta(gamma) = {delta_max:.17e}"),
            ))
        }
    };
    Ok(ProblemParams::assemble(gamma, epsilon, delta, RampShape::Linear))
}

impl ProblemParams {
    fn assemble(gamma: f64, epsilon: f64, delta: f64, ramp: RampShape) -> Self {
        let alpha = alpha_of(gamma);
        let sigma = (1.0 - gamma) / 4.0;
        let c_alpha = (1.0 / (alpha.powi(3) * (alpha - 1.0))).powf(1.0 / (3.0 + gamma));
        let eps_alpha = epsilon.powf(alpha);
        ProblemParams {
            gamma,
            epsilon,
            delta,
            alpha,
            sigma,
            c_alpha,
            eps_alpha,
            dead_level: 0.5 * delta * eps_alpha,
            ramp,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    /// `α = 4/(3+γ)`
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    /// `σ = 1 − 1/α = (1−γ)/4`
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    /// `C_α = (α³(α−1))^(−1/(3+γ))`
    pub fn c_alpha(&self) -> f64 {
        self.c_alpha
    }
    /// `ε^α`
    pub fn eps_alpha(&self) -> f64 {
        self.eps_alpha
    }
    pub fn ramp(&self) -> RampShape {
        self.ramp
    }
    /// `αγ = 4 − 3α`, the exponent of the scaling covariance.
    pub fn scaling_exponent(&self) -> f64 {
        self.alpha * self.gamma
    }

    /// Same γ, δ and ramp at a different penalization scale.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(domain("epsilon", epsilon, "epsilon > 0"));
        }
        Ok(Self::assemble(self.gamma, epsilon, self.delta, self.ramp))
    }

    pub fn with_ramp(&self, ramp: RampShape) -> Self {
        Self::assemble(self.gamma, self.epsilon, self.delta, ramp)
    }

    /// Replaces δ without the admissibility check.
    ///
    /// Only meant for probing failure modes of the barrier construction.
    pub fn with_delta_unchecked(&self, delta: f64) -> Self {
        Self::assemble(self.gamma, self.epsilon, delta, self.ramp)
    }

    /// `B_ε(s)`.
    pub fn penalty(&self, s: f64) -> f64 {
        shaped_penalty(s / self.eps_alpha, self.delta, self.ramp)
    }

    /// `B_ε(s) s^(−γ)` for `s ≥ 0`, hard zero where `B_ε` vanishes.
    #[inline]
    pub fn source(&self, s: f64) -> f64 {
        if s <= self.dead_level {
            return 0.0;
        }
        let b = self.penalty(s);
        if self.gamma == 0.0 {
            b
        } else {
            b * s.powf(-self.gamma)
        }
    }

    /// Global Lipschitz constant of [`Self::source`] on `[0, ∞)`.
    pub fn source_lipschitz(&self) -> f64 {
        (self.ramp.max_slope() + self.gamma) * self.dead_level.powf(-1.0 - self.gamma)
    }

    /// `d source / ds`, taking the one-sided value at the ramp corners.
    pub(crate) fn source_derivative(&self, s: f64) -> f64 {
        if s <= self.dead_level {
            return 0.0;
        }
        let x = s / self.eps_alpha;
        let (b, db) = if x >= self.delta {
            (1.0, 0.0)
        } else {
            let t = 2.0 * x / self.delta - 1.0;
            (
                self.ramp.profile(t),
                self.ramp.derivative(t) * 2.0 / (self.delta * self.eps_alpha),
            )
        };
        if self.gamma == 0.0 {
            db
        } else {
            db * s.powf(-self.gamma) - self.gamma * b * s.powf(-self.gamma - 1.0)
        }
    }

    /// Sup of the source over `s ≥ 0`; bounded by `(δε^α/2)^(−γ)`.
    pub fn source_sup_bound(&self) -> f64 {
        self.dead_level.powf(-self.gamma)
    }
}

fn shaped_penalty(s: f64, delta: f64, ramp: RampShape) -> f64 {
    if s <= 0.5 * delta {
        0.0
    } else if s >= delta {
        1.0
    } else {
        ramp.profile(2.0 * s / delta - 1.0)
    }
}

/// `B(s)` with the linear ramp.
pub fn penalty_base(s: f64, delta: f64) -> f64 {
    shaped_penalty(s, delta, RampShape::Linear)
}

/// `B_ε(s) = B(s/ε^α)` with the ramp stored in `p`.
pub fn penalty_eps(s: f64, p: &ProblemParams) -> f64 {
    p.penalty(s)
}

/// `B_ε(s) s^(−γ)`; negative arguments are rejected.
pub fn rhs(s: f64, p: &ProblemParams) -> Result<f64> {
    if s.is_nan() || s < 0.0 {
        return Err(domain("s", s, "s >= 0"));
    }
    Ok(p.source(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents_for_gamma_zero_and_half() {
        let p = derive_params(0.0, 0.1, None).unwrap();
        assert!((p.alpha() - 4.0 / 3.0).abs() < 1e-15);
        assert!((p.sigma() - 0.25).abs() < 1e-15);
        let q = derive_params(0.5, 0.1, None).unwrap();
        assert!((q.alpha() - 8.0 / 7.0).abs() < 1e-15);
        assert!((q.sigma() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn c_alpha_gamma_zero() {
        // α³(α−1) = 64/81 so C_α = (81/64)^(1/3)
        let p = derive_params(0.0, 1.0, None).unwrap();
        let expected = (81.0f64 / 64.0).cbrt();
        assert!((p.c_alpha() - expected).abs() < 1e-14);
        assert!((p.c_alpha() - 1.081_687).abs() < 1e-6);
    }

    #[test]
    fn c_alpha_identity_all_gammas() {
        for k in 0..10 {
            let p = derive_params(k as f64 / 10.0, 0.3, None).unwrap();
            let a = p.alpha();
            let lhs = p.c_alpha().powf(3.0 + p.gamma()) * a.powi(3) * (a - 1.0);
            assert!((lhs - 1.0).abs() < 1e-12, "gamma {}", p.gamma());
            assert!(a > 1.0 && a <= 4.0 / 3.0);
            assert!(p.sigma() > 0.0 && p.sigma() <= 0.25);
            assert!((p.sigma() - (1.0 - 1.0 / a)).abs() < 1e-15);
        }
    }

    /// Bisection on `8 δ^(3+γ) 2^γ α⁴ = 1`, independent of the closed form.
    fn delta_by_bisection(gamma: f64) -> f64 {
        let a = 4.0 / (3.0 + gamma);
        let g = |d: f64| 8.0 * d.powf(3.0 + gamma) * 2f64.powf(gamma) * a.powi(4) - 1.0;
        let (mut lo, mut hi) = (1e-6, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn max_delta_matches_root_of_annulus_inequality() {
        assert!((max_admissible_delta(0.0).unwrap() - 0.340_71).abs() < 1e-5);
        for gamma in [0.0, 0.3, 0.5, 0.9] {
            let d = max_admissible_delta(gamma).unwrap();
            assert!((d - delta_by_bisection(gamma)).abs() < 1e-12, "gamma {gamma}");
            let a = 4.0 / (3.0 + gamma);
            // non-binding outer constraint
            assert!(8.0 * d.powi(3) * a.powi(3) * (a - 1.0) <= (2.0 * d).powf(-gamma));
        }
    }

    #[test]
    fn parameter_domain_errors_name_the_field() {
        let e = derive_params(1.0, 0.1, None).unwrap_err().to_string();
        assert!(e.contains("gamma"), "{e}");
        let e = derive_params(0.0, 0.0, None).unwrap_err().to_string();
        assert!(e.contains("epsilon"), "{e}");
        let e = derive_params(0.0, 0.1, Some(1.0)).unwrap_err().to_string();
        assert!(e.contains("delta") && e.contains("3.40"), "{e}");
        assert!(derive_params(-0.1, 0.1, None).is_err());
        assert!(derive_params(0.0, 0.1, Some(0.0)).is_err());
        assert!(max_admissible_delta(f64::NAN).is_err());
    }

    #[test]
    fn default_delta_is_half_of_max() {
        let p = derive_params(0.5, 0.2, None).unwrap();
        assert_eq!(p.delta(), 0.5 * max_admissible_delta(0.5).unwrap());
    }

    #[test]
    fn penalty_base_breakpoints() {
        let d = 0.3;
        assert_eq!(penalty_base(d / 2.0, d), 0.0);
        assert_eq!(penalty_base(d, d), 1.0);
        assert!((penalty_base(0.75 * d, d) - 0.5).abs() < 1e-15);
        assert_eq!(penalty_base(-1.0, d), 0.0);
        assert_eq!(penalty_base(10.0, d), 1.0);
    }

    #[test]
    fn penalty_eps_breakpoints() {
        let p = derive_params(0.2, 0.05, None).unwrap();
        let ea = p.epsilon().powf(p.alpha());
        assert_eq!(penalty_eps(p.delta() * ea, &p), 1.0);
        assert_eq!(penalty_eps(0.0, &p), 0.0);
        assert!((penalty_eps(0.75 * p.delta() * ea, &p) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn source_derivative_matches_difference_quotient() {
        for ramp in [RampShape::Linear, RampShape::Smoothstep] {
            let p = derive_params(0.6, 0.2, None).unwrap().with_ramp(ramp);
            let ea = p.eps_alpha();
            for x in [0.3, 0.6, 0.8, 0.95, 1.5, 4.0] {
                let s = x * p.delta() * ea;
                let h = 1e-7 * s;
                let fd = (p.source(s + h) - p.source(s - h)) / (2.0 * h);
                let d = p.source_derivative(s);
                assert!((d - fd).abs() <= 1e-5 * fd.abs().max(1.0), "{ramp:?} x {x}: {d} vs {fd}");
                assert!(d.abs() <= p.source_lipschitz() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn rhs_examples() {
        let p = derive_params(0.0, 0.1, None).unwrap();
        assert_eq!(rhs(0.0, &p).unwrap(), 0.0);
        assert!((rhs(p.delta() * p.eps_alpha(), &p).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(rhs(5.0, &p).unwrap(), 1.0);
        let q = derive_params(0.5, 1.0, Some(0.2)).unwrap();
        assert!((rhs(0.25, &q).unwrap() - 2.0).abs() < 1e-14);
        assert!(rhs(-1e-3, &q).is_err());
    }

    #[test]
    fn smoothstep_ramp_shares_endpoints() {
        let p = derive_params(0.3, 0.1, None).unwrap().with_ramp(RampShape::Smoothstep);
        let ea = p.eps_alpha();
        assert_eq!(p.penalty(0.5 * p.delta() * ea), 0.0);
        assert_eq!(p.penalty(p.delta() * ea), 1.0);
        assert!((p.penalty(0.75 * p.delta() * ea) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn derive_params_is_bitwise_deterministic() {
        let a = derive_params(0.37, 0.013, Some(0.11)).unwrap();
        let b = derive_params(0.37, 0.013, Some(0.11)).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert_eq!(a.c_alpha().to_bits(), b.c_alpha().to_bits());
    }
}

//! Exact radial objects used as oracles and barriers.
//!
//! * the radial family `ω_ε(s) = C_α (s+ε)^α` and its limit `ω(s) = C_α s^α`;
//! * the piecewise barrier `Φ_η` (constant core, quadratic annulus, power tail)
//!   and its rescaled version `Φ_ε(x) = ε^α Φ_{r/ε}(x/ε)`;
//! * the infinity-harmonic function `|x|^{4/3} − |y|^{4/3}`.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::{max_admissible_delta, penalty_base, ProblemParams};

/// `C_α (s+ε)^α` at the penalization scale of `p`.
pub fn radial_exact(s: f64, p: &ProblemParams) -> f64 {
    radial_profile(s, p.epsilon(), p)
}

/// `C_α s^α`, the ε → 0 member of the family.
pub fn radial_limit(s: f64, p: &ProblemParams) -> f64 {
    radial_profile(s, 0.0, p)
}

/// `C_α (s+eps)^α` for an explicit `eps ≥ 0`.
pub fn radial_profile(s: f64, eps: f64, p: &ProblemParams) -> f64 {
    p.c_alpha() * (s + eps).powf(p.alpha())
}

/// `ω''(ω')² − ω^(−γ)` for `ω = coeff·(s+eps)^α`, from closed-form derivatives.
pub fn radial_ode_residual_with(s: f64, eps: f64, coeff: f64, p: &ProblemParams) -> Result<f64> {
    let t = s + eps;
    if t <= 0.0 {
        return Err(Error::SingularPoint(format!(
            "radial ODE evaluated at s + eps = {t}"
        )));
    }
    let a = p.alpha();
    let d1 = coeff * a * t.powf(a - 1.0);
    let d2 = coeff * a * (a - 1.0) * t.powf(a - 2.0);
    let w = coeff * t.powf(a);
    Ok(d2 * d1 * d1 - w.powf(-p.gamma()))
}

/// Residual of the radial ODE for the exact family at `p.epsilon()`.
pub fn radial_ode_residual(s: f64, p: &ProblemParams) -> Result<f64> {
    radial_ode_residual_with(s, p.epsilon(), p.c_alpha(), p)
}

/// Radius compatible with boundary value `c` for the limit profile.
pub fn radius_for_boundary(c: f64, p: &ProblemParams) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(domain("C", c, "C > 0"));
    }
    Ok((c / p.c_alpha()).powf(1.0 / p.alpha()))
}

/// `C_α R^α`, inverse of [`radius_for_boundary`].
pub fn boundary_for_radius(radius: f64, p: &ProblemParams) -> f64 {
    radial_limit(radius, p)
}

/// Radial solution on `B_R` with the compatible boundary value `C_α(R+ε)^α`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RadialSolution {
    pub params: ProblemParams,
    pub radius: f64,
    pub boundary_value: f64,
}

impl RadialSolution {
    pub fn new(params: ProblemParams, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(domain("R", radius, "R > 0"));
        }
        Ok(RadialSolution {
            params,
            radius,
            boundary_value: radial_exact(radius, &params),
        })
    }

    pub fn value(&self, s: f64) -> f64 {
        radial_exact(s, &self.params)
    }

    /// Infimum over the ball, attained at the origin.
    pub fn infimum(&self) -> f64 {
        self.params.c_alpha() * self.params.eps_alpha()
    }
}

/// Parameters of the radial barrier `Φ_η`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BarrierSpec {
    pub eta: f64,
    pub params: ProblemParams,
}

impl BarrierSpec {
    pub fn new(eta: f64, params: ProblemParams) -> Result<Self> {
        let spec = Self::new_unchecked(eta, params)?;
        let dmax = max_admissible_delta(params.gamma())?;
        if params.delta() > dmax {
            return Err(domain(
                "delta",
                params.delta(),
                format!("delta <= max_admissible_delta(gamma) = {dmax:.17e}"),
            ));
        }
        Ok(spec)
    }

    /// Skips the δ admissibility check (η is still validated).
    pub fn new_unchecked(eta: f64, params: ProblemParams) -> Result<Self> {
        if !(eta.is_finite() && eta >= 1.0) {
            return Err(domain("eta", eta, "eta >= 1"));
        }
        Ok(BarrierSpec { eta, params })
    }

    /// Radius of the flat core, `ση`.
    pub fn core_radius(&self) -> f64 {
        self.params.sigma() * self.eta
    }

    /// `A = δ α² η^(α−2)`, curvature coefficient of the annulus branch.
    pub fn annulus_coeff(&self) -> f64 {
        let a = self.params.alpha();
        self.params.delta() * a * a * self.eta.powf(a - 2.0)
    }

    /// Constant term of the tail, `D = δ(1 − η^α)`.
    pub fn tail_offset(&self) -> f64 {
        self.params.delta() * (1.0 - self.eta.powf(self.params.alpha()))
    }

    fn region(&self, r: f64, side: Side) -> BarrierRegion {
        let (c, e) = (self.core_radius(), self.eta);
        let below = |x: f64| match side {
            Side::Left => r <= x,
            Side::Right => r < x,
        };
        if below(c) {
            BarrierRegion::Core
        } else if below(e) {
            BarrierRegion::Annulus
        } else {
            BarrierRegion::Tail
        }
    }
}

/// Which one-sided branch to use at a breakpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierRegion {
    Core,
    Annulus,
    Tail,
}

fn branch_value(r: f64, b: &BarrierSpec, region: BarrierRegion) -> f64 {
    let p = &b.params;
    let d = p.delta();
    match region {
        BarrierRegion::Core => d,
        BarrierRegion::Annulus => {
            let x = r - b.core_radius();
            b.annulus_coeff() * x * x + d
        }
        BarrierRegion::Tail => 2.0 * d * r.powf(p.alpha()) + b.tail_offset(),
    }
}

fn branch_slope(r: f64, b: &BarrierSpec, region: BarrierRegion) -> f64 {
    let p = &b.params;
    match region {
        BarrierRegion::Core => 0.0,
        BarrierRegion::Annulus => 2.0 * b.annulus_coeff() * (r - b.core_radius()),
        BarrierRegion::Tail => 2.0 * p.delta() * p.alpha() * r.powf(p.alpha() - 1.0),
    }
}

fn branch_curvature(r: f64, b: &BarrierSpec, region: BarrierRegion) -> f64 {
    let p = &b.params;
    let a = p.alpha();
    match region {
        BarrierRegion::Core => 0.0,
        BarrierRegion::Annulus => 2.0 * b.annulus_coeff(),
        BarrierRegion::Tail => 2.0 * p.delta() * a * (a - 1.0) * r.powf(a - 2.0),
    }
}

/// `Φ_η(r)`. Continuous, so the side convention does not matter.
pub fn barrier_value(r: f64, b: &BarrierSpec) -> f64 {
    branch_value(r, b, b.region(r, Side::Left))
}

/// `Φ_η'(r)` from the given side.
pub fn barrier_slope(r: f64, b: &BarrierSpec, side: Side) -> f64 {
    branch_slope(r, b, b.region(r, side))
}

/// `Φ''(Φ')²` from the given side of any breakpoint.
pub fn barrier_inf_laplacian_sided(r: f64, b: &BarrierSpec, side: Side) -> f64 {
    let region = b.region(r, side);
    match region {
        BarrierRegion::Core => 0.0,
        BarrierRegion::Annulus => {
            // 8δ³α⁶η^{3(α−2)}(r−ση)², written through A to share rounding
            // with the value branch.
            let s = branch_slope(r, b, region);
            branch_curvature(r, b, region) * s * s
        }
        BarrierRegion::Tail => {
            let p = &b.params;
            let a = p.alpha();
            8.0 * p.delta().powi(3) * a.powi(3) * (a - 1.0) * r.powf(-p.scaling_exponent())
        }
    }
}

/// `Φ''(Φ')²`; at breakpoints the value from the left (inner) branch.
pub fn barrier_inf_laplacian(r: f64, b: &BarrierSpec) -> f64 {
    barrier_inf_laplacian_sided(r, b, Side::Left)
}

/// Outcome of sampling the supersolution inequality `Δ∞Φ ≤ B(Φ)Φ^(−γ)`.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub passed: bool,
    /// Sup of `(LHS − RHS)⁺` over the samples.
    pub max_violation: f64,
    pub worst_radius: f64,
    pub worst_region: BarrierRegion,
    /// Smallest `RHS − LHS` seen (negative when violated).
    pub min_margin: f64,
    pub samples: usize,
}

/// Absolute slack allowed on the sampled inequality.
pub const SUPERSOLUTION_SLACK: f64 = 1e-12;

/// Samples `r ∈ {0} ∪ log-uniform[10⁻⁶η, 10η]` plus both sides of each breakpoint.
pub fn verify_supersolution(b: &BarrierSpec, n_samples: usize) -> Result<VerificationReport> {
    if n_samples < 100 {
        return Err(domain("n_samples", n_samples as f64, "n_samples >= 100"));
    }
    let (lo, hi) = (1e-6 * b.eta, 10.0 * b.eta);
    let ratio = (hi / lo).ln();
    let mut points: Vec<(f64, Side)> = Vec::with_capacity(n_samples + 5);
    points.push((0.0, Side::Right));
    for k in 0..n_samples {
        let t = k as f64 / (n_samples - 1) as f64;
        points.push(((lo.ln() + t * ratio).exp(), Side::Left));
    }
    for r in [b.core_radius(), b.eta] {
        points.push((r, Side::Left));
        points.push((r, Side::Right));
    }

    let gamma = b.params.gamma();
    let delta = b.params.delta();
    let mut report = VerificationReport {
        passed: true,
        max_violation: 0.0,
        worst_radius: 0.0,
        worst_region: BarrierRegion::Core,
        min_margin: f64::INFINITY,
        samples: points.len(),
    };
    for (r, side) in points {
        let phi = barrier_value(r, b);
        let lhs = barrier_inf_laplacian_sided(r, b, side);
        let rhs = penalty_base(phi, delta) * phi.powf(-gamma);
        let margin = rhs - lhs;
        if margin < report.min_margin {
            report.min_margin = margin;
            report.worst_radius = r;
            report.worst_region = b.region(r, side);
        }
        report.max_violation = report.max_violation.max(-margin);
    }
    report.passed = report.max_violation <= SUPERSOLUTION_SLACK;
    Ok(report)
}

fn scaled_spec(r: f64, params: &ProblemParams) -> Result<BarrierSpec> {
    let eps = params.epsilon();
    if !(r.is_finite() && r >= eps) {
        return Err(domain("r", r, format!("r >= epsilon = {eps}")));
    }
    BarrierSpec::new_unchecked(r / eps, *params)
}

/// `Φ_ε(x) = ε^α Φ_{r/ε}(|x|/ε)`; requires `r ≥ ε`.
pub fn barrier_scaled(x_norm: f64, r: f64, params: &ProblemParams) -> Result<f64> {
    let spec = scaled_spec(r, params)?;
    Ok(params.eps_alpha() * barrier_value(x_norm / params.epsilon(), &spec))
}

/// `Δ∞Φ_ε(x) = ε^(−αγ) (Δ∞Φ_{r/ε})(|x|/ε)`.
pub fn barrier_scaled_inf_laplacian(x_norm: f64, r: f64, params: &ProblemParams) -> Result<f64> {
    let spec = scaled_spec(r, params)?;
    let eps = params.epsilon();
    Ok(eps.powf(-params.scaling_exponent()) * barrier_inf_laplacian(x_norm / eps, &spec))
}

/// `|x|^{4/3} − |y|^{4/3}`, infinity harmonic away from the axes.
pub fn aronson(x: f64, y: f64) -> f64 {
    x.abs().powf(4.0 / 3.0) - y.abs().powf(4.0 / 3.0)
}

//! Free-boundary extraction, growth fits and empirical estimate checks.
//!
//! Every check scans nodes and dyadic radii of a solved field and returns an
//! [`AnalysisReport`] carrying the empirical constant it measured, the worst
//! location and a pass flag.

mod checks;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::discrete::{Field, Grid};
use crate::error::{domain, Error, Result};
use crate::model::ProblemParams;

pub use checks::{
    density_check, density_ratio, flatness_growth_check, gradient_at_fb_check, lipschitz_check,
    nondegeneracy_check, oscillation_check, porosity_estimate, scaling_residual_check,
    stability_report,
};

/// Subset of the nodes of one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet {
    grid: Arc<Grid>,
    members: Vec<bool>,
}

impl NodeSet {
    pub fn from_predicate(grid: Arc<Grid>, pred: impl Fn(usize) -> bool) -> Self {
        let members = (0..grid.len()).map(pred).collect();
        NodeSet { grid, members }
    }
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn contains(&self, k: usize) -> bool {
        self.members[k]
    }
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.members.len()).filter(move |&k| self.members[k])
    }
    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }
    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }
}

/// Least-squares power law `sup_{B_r} f ≈ c r^α`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub alpha_est: f64,
    pub c_est: f64,
    pub r_squared: f64,
    pub radii_used: Vec<f64>,
}

/// Outcome of one empirical check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub check: String,
    pub passed: bool,
    pub worst_node: Option<usize>,
    pub worst_location: Option<[f64; 2]>,
    /// The scanned quantity at the worst node (its meaning depends on the check).
    pub worst_value: f64,
    pub constants: BTreeMap<String, f64>,
    pub parameters: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl AnalysisReport {
    pub(crate) fn new(check: &str) -> Self {
        AnalysisReport {
            check: check.to_string(),
            passed: false,
            worst_node: None,
            worst_location: None,
            worst_value: f64::NAN,
            constants: BTreeMap::new(),
            parameters: BTreeMap::new(),
            note: None,
        }
    }

    pub(crate) fn worst(mut self, grid: &Grid, node: Option<usize>, value: f64) -> Self {
        self.worst_node = node;
        self.worst_location = node.map(|k| grid.coords(k));
        self.worst_value = value;
        self
    }

    pub(crate) fn constant(mut self, key: &str, v: f64) -> Self {
        self.constants.insert(key.to_string(), v);
        self
    }

    pub(crate) fn param(mut self, key: &str, v: f64) -> Self {
        self.parameters.insert(key.to_string(), v);
        self
    }

    pub(crate) fn params_of(self, p: &ProblemParams) -> Self {
        self.param("gamma", p.gamma())
            .param("epsilon", p.epsilon())
            .param("delta", p.delta())
            .param("alpha", p.alpha())
    }

    /// A failed report carrying the reason the check could not run.
    pub fn unavailable(check: &str, reason: impl Into<String>) -> Self {
        let mut rep = Self::new(check);
        rep.note = Some(reason.into());
        rep
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }
}

/// Max of `f` over nodes within Euclidean distance `r` of `center`.
pub fn ball_sup(f: &Field, center: usize, r: f64) -> f64 {
    f.grid()
        .nodes_in_ball(center, r.max(0.0))
        .map(|k| f.get(k))
        .fold(f.get(center), f64::max)
}

/// `{f > threshold}`.
pub fn positivity_set(f: &Field, threshold: f64) -> Result<NodeSet> {
    if !(threshold >= 0.0) {
        return Err(domain("threshold", threshold, "threshold >= 0"));
    }
    Ok(NodeSet::from_predicate(f.grid().clone(), |k| f.get(k) > threshold))
}

/// Lattice offsets of the nearest neighbors used for set boundaries.
fn unit_offsets(grid: &Grid) -> Vec<[i32; 2]> {
    if grid.dim() == 1 {
        vec![[-1, 0], [1, 0]]
    } else {
        let mut v = Vec::with_capacity(8);
        for dj in -1..=1 {
            for di in -1..=1 {
                if (di, dj) != (0, 0) {
                    v.push([di, dj]);
                }
            }
        }
        v
    }
}

fn touches(grid: &Grid, k: usize, pred: impl Fn(usize) -> bool) -> bool {
    unit_offsets(grid)
        .into_iter()
        .any(|d| grid.shifted(k, d).is_some_and(&pred))
}

/// Nodes of `{f > threshold}` with a neighbor outside it.
pub fn free_boundary(f: &Field, threshold: f64) -> Result<NodeSet> {
    let pos = positivity_set(f, threshold)?;
    let grid = f.grid().clone();
    Ok(NodeSet::from_predicate(grid.clone(), |k| {
        pos.contains(k) && touches(&grid, k, |n| !pos.contains(n))
    }))
}

/// Nodes outside `{f > threshold}` with a neighbor inside it: the zero side
/// of the free-boundary band.
pub fn contact_set(f: &Field, threshold: f64) -> Result<NodeSet> {
    let pos = positivity_set(f, threshold)?;
    let grid = f.grid().clone();
    Ok(NodeSet::from_predicate(grid.clone(), |k| {
        !pos.contains(k) && touches(&grid, k, |n| pos.contains(n))
    }))
}

/// `δε^α`, the level set on which non-degeneracy is stated.
pub fn penalized_threshold(p: &ProblemParams) -> f64 {
    p.delta() * p.eps_alpha()
}

/// `10·machine-ε·‖f‖∞`, separating round-off from positivity.
pub fn limit_threshold(f: &Field) -> f64 {
    10.0 * f64::EPSILON * f.sup_norm()
}

/// Dyadic radii `2^(−k)` in `[lo, hi]`, increasing.
pub fn dyadic_radii(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(lo > 0.0 && hi >= lo) {
        return out;
    }
    let mut k = hi.log2().floor() as i32;
    loop {
        let r = 2f64.powi(k);
        if r < lo * (1.0 - 1e-12) {
            break;
        }
        if r <= hi * (1.0 + 1e-12) {
            out.push(r);
        }
        k -= 1;
    }
    out.reverse();
    out
}

/// Least-squares slope and intercept of `y` on `x` with the `r²` of the fit.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (slope, intercept, r2)
}

/// Fits `log ball_sup(f, center, r)` against `log r` over radii `≥ 4h`.
pub fn growth_exponent_fit(f: &Field, center: usize, radii: &[f64]) -> Result<FitResult> {
    let h = f.grid().h();
    let (mut xs, mut ys, mut used) = (Vec::new(), Vec::new(), Vec::new());
    for &r in radii {
        if r < 4.0 * h * (1.0 - 1e-12) {
            continue;
        }
        let s = ball_sup(f, center, r);
        if s > 0.0 && s.is_finite() {
            xs.push(r.ln());
            ys.push(s.ln());
            used.push(r);
        }
    }
    if used.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "growth fit needs 3 radii >= 4h with positive sup, got {}",
            used.len()
        )));
    }
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    Ok(FitResult {
        alpha_est: slope,
        c_est: intercept.exp(),
        r_squared: r2,
        radii_used: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::Geometry;

    fn line(h: f64) -> Arc<Grid> {
        Arc::new(Grid::interval(1.0, h).unwrap())
    }

    #[test]
    fn ball_sup_basics() {
        let g = line(0.1);
        let f = Field::from_fn(g.clone(), |x| x[0]);
        assert_eq!(ball_sup(&f, g.origin(), 0.05), 0.0);
        assert!((ball_sup(&f, g.origin(), 0.25) - 0.2).abs() < 1e-15);
        let c = Field::from_fn(g.clone(), |_| 2.5);
        assert_eq!(ball_sup(&c, g.origin(), 0.5), 2.5);
    }

    #[test]
    fn sets_of_a_cone() {
        let g = Arc::new(Grid::plane(1.0, 0.125, Geometry::Box, 1).unwrap());
        let f = Field::from_fn(g.clone(), |x| x[0].hypot(x[1]));
        let fb = free_boundary(&f, limit_threshold(&f)).unwrap();
        assert_eq!(fb.len(), 8);
        assert!(fb.iter().all(|k| g.norm(k) <= 2.0 * 0.125));
        let contact = contact_set(&f, limit_threshold(&f)).unwrap();
        assert_eq!(contact.iter().collect::<Vec<_>>(), vec![g.origin()]);
        let zero = Field::zeros(g);
        assert!(positivity_set(&zero, 0.0).unwrap().is_empty());
        assert!(positivity_set(&zero, -1.0).is_err());
    }

    #[test]
    fn dyadic_radii_bounds() {
        assert_eq!(dyadic_radii(0.1, 0.5), vec![0.125, 0.25, 0.5]);
        assert_eq!(dyadic_radii(0.125, 0.2), vec![0.125]);
        assert!(dyadic_radii(0.6, 0.5).is_empty());
    }

    #[test]
    fn fit_recovers_powers() {
        let g = line(1.0 / 1024.0);
        for beta in [1.0, 1.2, 4.0 / 3.0] {
            let f = Field::from_fn(g.clone(), |x| x[0].abs().powf(beta));
            let fit = growth_exponent_fit(&f, g.origin(), &dyadic_radii(4e-3, 0.5)).unwrap();
            assert!((fit.alpha_est - beta).abs() < 0.01, "{beta}: {fit:?}");
            assert!(fit.r_squared > 0.999);
        }
        let f = Field::from_fn(g.clone(), |x| x[0]);
        assert!(growth_exponent_fit(&f, g.origin(), &[1e-3, 2e-3, 0.5]).is_err());
    }
}

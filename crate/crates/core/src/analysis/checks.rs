use std::sync::Arc;

use rayon::prelude::*;

use super::{
    ball_sup, contact_set, dyadic_radii, free_boundary, limit_threshold, linear_fit,
    penalized_threshold, unit_offsets, AnalysisReport,
};
use crate::discrete::{residual_field, DirectionSet, Field, Geometry, Grid};
use crate::error::{domain, Error, Result};
use crate::model::ProblemParams;

/// Max over a parallel scan, reduced in node order so reruns agree bitwise.
fn argmax(items: Vec<Option<(f64, usize)>>) -> Option<(f64, usize)> {
    items.into_iter().flatten().fold(None, |best, (v, k)| match best {
        Some((b, _)) if b >= v => best,
        _ => Some((v, k)),
    })
}

type Scan = Option<(f64, usize)>;

fn argmin(items: Vec<Option<(f64, usize)>>) -> Option<(f64, usize)> {
    items.into_iter().flatten().fold(None, |best, (v, k)| match best {
        Some((b, _)) if b <= v => best,
        _ => Some((v, k)),
    })
}

/// `sup_{B_κ(x)} f / κ^α` over interior `x` and dyadic `κ` with
/// `max(4h, f(x)^{1/α}) ≤ κ ≤ τκ_0`, `τ = max(1, ‖f‖^{1/α})`.
///
/// The ratio is invariant under `w(x) = τ^{−α} f(τx)`, so scanning `f` on
/// radii `τκ` is the same as scanning the normalized field on radii `κ`.
pub fn oscillation_check(f: &Field, p: &ProblemParams, kappa_0: f64) -> AnalysisReport {
    let grid = f.grid();
    let a = p.alpha();
    let h = grid.h();
    let tau = f.sup_norm().powf(1.0 / a).max(1.0);
    let hi = tau * kappa_0;
    let nodes: Vec<usize> = grid.interior_nodes().collect();
    let scans: Vec<(Option<(f64, usize)>, usize)> = nodes
        .par_iter()
        .map(|&k| {
            let lo = (4.0 * h).max(f.get(k).max(0.0).powf(1.0 / a));
            let radii = dyadic_radii(lo, hi);
            let best = radii
                .iter()
                .map(|&r| ball_sup(f, k, r) / r.powf(a))
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
            (best.map(|v| (v, k)), radii.len())
        })
        .collect();
    let pairs: usize = scans.iter().map(|s| s.1).sum();
    let worst = argmax(scans.into_iter().map(|s| s.0).collect());
    let c_emp = worst.map_or(0.0, |w| w.0);
    let mut rep = AnalysisReport::new("oscillation")
        .worst(grid, worst.map(|w| w.1), c_emp)
        .constant("C_emp", c_emp)
        .constant("pairs", pairs as f64)
        .constant("tau", tau)
        .param("kappa_0", kappa_0)
        .param("h", h)
        .params_of(p);
    rep.passed = c_emp.is_finite() && pairs > 0;
    rep
}

/// Relative drift of an empirical constant between a grid and its refinement.
pub fn stability_report(check: &str, coarse: f64, fine: f64, max_drift: f64) -> AnalysisReport {
    let drift = (fine - coarse).abs() / coarse.abs();
    let mut rep = AnalysisReport::new(check)
        .constant("coarse", coarse)
        .constant("fine", fine)
        .constant("drift", drift)
        .param("max_drift", max_drift);
    rep.worst_value = drift;
    rep.passed = coarse.is_finite() && fine.is_finite() && drift <= max_drift;
    rep
}

/// `sup_{B_r(x)} f ≥ δ r^α` on `{f ≥ δε^α}` for dyadic `r` between
/// `max(ε, 4h)` and half the distance to the nearest carrier, with slack `5h/r`.
pub fn nondegeneracy_check(f: &Field, p: &ProblemParams) -> AnalysisReport {
    let grid = f.grid();
    let (a, h, delta) = (p.alpha(), grid.h(), p.delta());
    let level = penalized_threshold(p);
    let dist = grid.boundary_distance();
    let nodes: Vec<usize> = grid.interior_nodes().filter(|&k| f.get(k) >= level).collect();
    let scans: Vec<(Scan, Scan, usize)> = nodes
        .par_iter()
        .map(|&k| {
            let radii = dyadic_radii(p.epsilon().max(4.0 * h), 0.5 * dist[k]);
            let mut min_ratio: Option<f64> = None;
            let mut min_margin: Option<f64> = None;
            for &r in &radii {
                let ratio = ball_sup(f, k, r) / (delta * r.powf(a));
                let margin = ratio - (1.0 - 5.0 * h / r);
                min_ratio = Some(min_ratio.map_or(ratio, |m| m.min(ratio)));
                min_margin = Some(min_margin.map_or(margin, |m| m.min(margin)));
            }
            (min_ratio.map(|v| (v, k)), min_margin.map(|v| (v, k)), radii.len())
        })
        .collect();
    let pairs: usize = scans.iter().map(|s| s.2).sum();
    let ratio = argmin(scans.iter().map(|s| s.0).collect());
    let margin = argmin(scans.iter().map(|s| s.1).collect());
    let min_ratio = ratio.map_or(f64::NAN, |r| r.0);
    let mut rep = AnalysisReport::new("nondegeneracy")
        .worst(grid, margin.map(|m| m.1), margin.map_or(f64::NAN, |m| m.0))
        .constant("min_ratio", min_ratio)
        .constant("c_emp", min_ratio * delta)
        .constant("pairs", pairs as f64)
        .param("h", h)
        .params_of(p);
    rep.passed = pairs > 0 && margin.is_some_and(|m| m.0 >= 0.0);
    rep
}

/// `sup_{B_ρ(x)} f / (ρ + f(x)^{1/α})^α` on `{f < δ_0}`, where `δ_0` makes
/// 10% of the nodes qualify.
pub fn flatness_growth_check(f: &Field, p: &ProblemParams, rho_max: f64) -> AnalysisReport {
    let grid = f.grid();
    let (a, h) = (p.alpha(), grid.h());
    let mut sorted: Vec<f64> = f.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let want = (sorted.len() as f64 * 0.1).ceil() as usize;
    let delta_0 = sorted
        .iter()
        .copied()
        .find(|&v| sorted.partition_point(|&w| w < v) >= want)
        .unwrap_or_else(|| sorted.last().copied().unwrap_or(0.0) * (1.0 + 1e-12) + f64::MIN_POSITIVE);
    let radii = dyadic_radii(4.0 * h, rho_max);
    let nodes: Vec<usize> = (0..grid.len()).filter(|&k| f.get(k) < delta_0).collect();
    let scans: Vec<Option<(f64, usize)>> = nodes
        .par_iter()
        .map(|&k| {
            let lift = f.get(k).max(0.0).powf(1.0 / a);
            radii
                .iter()
                .map(|&r| ball_sup(f, k, r) / (r + lift).powf(a))
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
                .map(|v| (v, k))
        })
        .collect();
    let worst = argmax(scans);
    let c_emp = worst.map_or(0.0, |w| w.0);
    let mut rep = AnalysisReport::new("flatness_growth")
        .worst(grid, worst.map(|w| w.1), c_emp)
        .constant("C_emp", c_emp)
        .constant("delta_0", delta_0)
        .constant("nodes", nodes.len() as f64)
        .param("rho_max", rho_max)
        .param("h", h)
        .params_of(p);
    rep.passed = c_emp.is_finite() && !nodes.is_empty() && !radii.is_empty();
    rep
}

/// Decay of one-sided difference quotients at the zero side of the free
/// boundary: at each contact node `x`, `q(t) = max_e |f(x+te) − f(x)|/t` for
/// `t ∈ {h, 2h, 4h, 8h}` is fitted to `t^β`; passes iff `β ≥ (α−1) − 0.15`
/// at every such node.
pub fn gradient_at_fb_check(f: &Field, p: &ProblemParams) -> AnalysisReport {
    let grid = f.grid();
    let threshold = limit_threshold(f);
    let required = p.alpha() - 1.0 - 0.15;
    let offsets = unit_offsets(grid);
    let contact = contact_set(f, threshold).expect("nonnegative threshold");
    let nodes: Vec<usize> = contact.iter().collect();
    let fits: Vec<Option<(f64, usize)>> = nodes
        .par_iter()
        .map(|&k| {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for m in [1, 2, 4, 8] {
                let t = m as f64 * grid.h();
                let q = offsets
                    .iter()
                    .filter_map(|d| {
                        let n = grid.shifted(k, [d[0] * m, d[1] * m])?;
                        let len = f64::from(d[0]).hypot(f64::from(d[1])) * t;
                        Some((f.get(n) - f.get(k)).abs() / len)
                    })
                    .fold(0.0, f64::max);
                if q > 0.0 {
                    xs.push(t.ln());
                    ys.push(q.ln());
                }
            }
            (xs.len() >= 2).then(|| (linear_fit(&xs, &ys).0, k))
        })
        .collect();
    let fitted = fits.iter().filter(|x| x.is_some()).count();
    let worst = argmin(fits);
    let min_exp = worst.map_or(f64::NAN, |w| w.0);
    let mut rep = AnalysisReport::new("gradient_at_free_boundary")
        .worst(grid, worst.map(|w| w.1), min_exp)
        .constant("min_exponent", min_exp)
        .constant("required", required)
        .constant("nodes", nodes.len() as f64)
        .constant("fitted", fitted as f64)
        .param("threshold", threshold)
        .params_of(p);
    rep.passed = fitted > 0 && fitted == nodes.len() && min_exp >= required;
    rep
}

/// Fraction of nodes of `B_κ(center)` where `f > threshold`.
pub fn density_ratio(f: &Field, center: usize, kappa: f64, threshold: f64) -> Result<f64> {
    let h = f.grid().h();
    if !(kappa >= 4.0 * h * (1.0 - 1e-12)) {
        return Err(domain("kappa", kappa, format!("kappa >= 4h = {}", 4.0 * h)));
    }
    if center >= f.grid().len() {
        return Err(Error::Grid(format!("node {center} out of range")));
    }
    let (mut pos, mut all) = (0usize, 0usize);
    for k in f.grid().nodes_in_ball(center, kappa) {
        all += 1;
        if f.get(k) > threshold {
            pos += 1;
        }
    }
    Ok(pos as f64 / all as f64)
}

/// For free-boundary nodes `x` and dyadic `ρ`, the largest `τ'` such that a
/// ball `B_{τ'ρ}(y) ⊂ B_ρ(x)` misses the free boundary; reports the minimum.
///
/// With `constants = Some((c, C))` the result is compared to
/// `min(1/2, (c/C)^{1/α})`.
pub fn porosity_estimate(
    f: &Field,
    p: &ProblemParams,
    threshold: f64,
    rho_max: f64,
    constants: Option<(f64, f64)>,
) -> Result<AnalysisReport> {
    let grid = f.grid();
    let h = grid.h();
    let fb = free_boundary(f, threshold)?;
    let fb_nodes: Vec<[f64; 2]> = fb.iter().map(|k| grid.coords(k)).collect();
    let dist: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let [x, y] = grid.coords(k);
            fb_nodes
                .iter()
                .map(|b| (b[0] - x).hypot(b[1] - y))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let radii = dyadic_radii(4.0 * h, rho_max);
    let centers: Vec<usize> = fb.iter().collect();
    let scans: Vec<Option<(f64, usize)>> = centers
        .par_iter()
        .map(|&k| {
            let [cx, cy] = grid.coords(k);
            radii
                .iter()
                .map(|&r| {
                    grid.nodes_in_ball(k, r)
                        .map(|y| {
                            let [yx, yy] = grid.coords(y);
                            (r - (yx - cx).hypot(yy - cy)).min(dist[y])
                        })
                        .fold(0.0, f64::max)
                        / r
                })
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))
                .map(|v| (v, k))
        })
        .collect();
    let worst = argmin(scans);
    let tau = worst.map_or(f64::NAN, |w| w.0);
    let mut rep = AnalysisReport::new("porosity")
        .worst(grid, worst.map(|w| w.1), tau)
        .constant("porosity_tau", tau)
        .constant("free_boundary_nodes", centers.len() as f64)
        .param("threshold", threshold)
        .param("rho_max", rho_max)
        .params_of(p);
    if let Some((c, big_c)) = constants {
        let bound = (c / big_c).powf(1.0 / p.alpha()).min(0.5);
        rep = rep
            .constant("tau_bound", bound)
            .constant("meets_bound", f64::from(u8::from(tau >= bound)));
    }
    rep.passed = tau > 0.0;
    Ok(rep)
}

/// Residual of the `(ε/ι)`-problem for `u_ι(x) = f(ιx)/ι^α` on the spacing-`h`
/// lattice of the ball of radius `R/ι`.
///
/// The discrete operator is exactly covariant: the residual of `u_ι` at `x`
/// equals `ι^{αγ}` times the spacing-`ιh` residual of `f` at `ιx`. The check
/// passes iff `sup|res(u_ι)| ≤ ι^{αγ}(sup|res(f)| + ι·h·S)` with `S` the
/// source bound, the last term absorbing the change of spacing.
pub fn scaling_residual_check(
    f: &Field,
    p: &ProblemParams,
    iota: u32,
    dirs: &DirectionSet,
) -> Result<AnalysisReport> {
    if !iota.is_power_of_two() {
        return Err(domain("iota", f64::from(iota), "a power of two"));
    }
    let grid = f.grid();
    let h = grid.h();
    let io = i64::from(iota);
    let fio = f64::from(iota);
    let sub_radius = grid.radius() / fio;
    let sub = match grid.dim() {
        1 => Grid::interval(sub_radius, h)?,
        _ => Grid::plane(sub_radius, h, Geometry::Box, grid.reach())?,
    };
    let image = |k: usize| {
        let [i, j] = sub.offset_of(k);
        grid.node_at_offset([i * io, j * io])
    };
    for k in 0..sub.len() {
        if image(k).is_none() {
            return Err(Error::Grid(format!("node {k} has no image under x -> {iota}x")));
        }
    }
    let pinned: Vec<bool> = (0..sub.len())
        .map(|k| !grid.is_interior(image(k).expect("checked above")))
        .collect();
    let scale = fio.powf(p.alpha());
    let values: Vec<f64> = (0..sub.len())
        .map(|k| f.get(image(k).expect("checked above")) / scale)
        .collect();
    let lookup = sub.clone();
    let sub = Arc::new(sub.with_pinned(|y| lookup.nearest_node(y).is_some_and(|k| pinned[k])));
    let scaled = Field::from_values(sub, values)?;
    let p_scaled = p.with_epsilon(p.epsilon() / fio)?;
    let res_f = residual_field(f, p, dirs)?.sup_norm();
    let res_scaled = residual_field(&scaled, &p_scaled, dirs)?;
    let res_g = res_scaled.sup_norm();
    let factor = fio.powf(p.scaling_exponent());
    let allowed = factor * (res_f + fio * h * p.source_sup_bound());
    let worst = res_scaled
        .values()
        .iter()
        .enumerate()
        .fold((0.0, 0), |(m, km), (k, v)| if v.abs() > m { (v.abs(), k) } else { (m, km) });
    let mut rep = AnalysisReport::new("scaling_residual")
        .worst(scaled.grid(), Some(worst.1), worst.0)
        .constant("residual_scaled", res_g)
        .constant("residual_base", res_f)
        .constant("allowed", allowed)
        .constant("covariance_factor", factor)
        .param("iota", fio)
        .param("h", h)
        .params_of(p);
    rep.passed = res_g <= allowed;
    Ok(rep)
}

/// Every nearest-neighbor difference quotient at interior `x` is at most
/// `2‖f‖/dist(x, carriers) + 10h‖f‖`.
pub fn lipschitz_check(f: &Field) -> AnalysisReport {
    let grid = f.grid();
    let h = grid.h();
    let norm = f.sup_norm();
    let dist = grid.boundary_distance();
    let offsets = unit_offsets(grid);
    let nodes: Vec<usize> = grid.interior_nodes().collect();
    let scans: Vec<Option<(f64, usize)>> = nodes
        .par_iter()
        .map(|&k| {
            let bound = 2.0 * norm / dist[k] + 10.0 * h * norm;
            let q = offsets
                .iter()
                .filter_map(|d| {
                    let n = grid.shifted(k, *d)?;
                    let len = f64::from(d[0]).hypot(f64::from(d[1])) * h;
                    Some((f.get(n) - f.get(k)).abs() / len)
                })
                .fold(0.0, f64::max);
            let ratio = if bound > 0.0 { q / bound } else if q > 0.0 { f64::INFINITY } else { 0.0 };
            Some((ratio, k))
        })
        .collect();
    let worst = argmax(scans);
    let ratio = worst.map_or(0.0, |w| w.0);
    let mut rep = AnalysisReport::new("lipschitz")
        .worst(grid, worst.map(|w| w.1), ratio)
        .constant("max_ratio", ratio)
        .param("h", h);
    rep.passed = ratio <= 1.0;
    rep
}

/// Density of `{f > threshold}` in `B_κ(x)` at every zero-side free-boundary
/// node `x`; reports the minimum as `density_ratio_min`.
pub fn density_check(f: &Field, kappa: f64, threshold: f64) -> Result<AnalysisReport> {
    let grid = f.grid();
    let centers: Vec<usize> = contact_set(f, threshold)?.iter().collect();
    let mut worst: Option<(f64, usize)> = None;
    for &k in &centers {
        let d = density_ratio(f, k, kappa, threshold)?;
        if worst.is_none_or(|w| d < w.0) {
            worst = Some((d, k));
        }
    }
    let min = worst.map_or(f64::NAN, |w| w.0);
    let mut rep = AnalysisReport::new("density")
        .worst(grid, worst.map(|w| w.1), min)
        .constant("density_ratio_min", min)
        .constant("centers", centers.len() as f64)
        .param("kappa", kappa)
        .param("threshold", threshold);
    rep.passed = min > 0.0;
    Ok(rep)
}

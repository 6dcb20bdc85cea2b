//! Minimal solutions of the penalized problem by monotone relaxation.
//!
//! The discrete problem is `L_h u = B_ε(u) u^(−γ)` at interior nodes with
//! Dirichlet data on carriers. Starting from a discrete subsolution, the
//! pseudo-time update `u ← u + τ (L_h u − rhs(u))` climbs to the least fixed
//! point above it. Iterates are clamped to `[0, max φ]`.
//!
//! The same fixed point is reached much faster by semismooth Newton with
//! pseudo-transient continuation: each step solves `(J − μ I) d = −F` and `μ`
//! shrinks as the residual does. The Jacobian of `L_h` has at most three
//! entries per row, all inside the stencil band, so each step is a banded
//! direct solve.

mod banded;
mod setup;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete::operator::{evaluate, residual_values, Eval, Kernel};
use crate::discrete::{DirectionSet, Field, Grid};
use crate::error::{Error, Result};
use crate::model::ProblemParams;
use banded::BandMatrix;

pub use setup::{BoundaryDatum, BoundarySpec, Plateau, ProblemTemplate};

/// Dirichlet problem for the penalized equation on a fixed grid.
#[derive(Clone, Debug)]
pub struct PenalizedProblem {
    params: ProblemParams,
    grid: Arc<Grid>,
    boundary: Vec<f64>,
    dirs: DirectionSet,
    upper: f64,
}

impl PenalizedProblem {
    /// `boundary` has one entry per node; only carrier entries are read.
    pub fn new(
        params: ProblemParams,
        grid: Arc<Grid>,
        boundary: Vec<f64>,
        dirs: DirectionSet,
    ) -> Result<Self> {
        Kernel::new(&grid, &dirs)?;
        if boundary.len() != grid.len() {
            return Err(Error::Grid(format!(
                "boundary data has {} entries for {} nodes",
                boundary.len(),
                grid.len()
            )));
        }
        let mut upper: f64 = 0.0;
        for k in grid.boundary_nodes() {
            let v = boundary[k];
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::ParameterDomain {
                    field: "boundary_data",
                    value: v,
                    constraint: format!("finite and >= 0 (node {k})"),
                });
            }
            upper = upper.max(v);
        }
        Ok(PenalizedProblem {
            params,
            grid,
            boundary,
            dirs,
            upper,
        })
    }

    /// Boundary data sampled from a function of position.
    pub fn from_fn(
        params: ProblemParams,
        grid: Arc<Grid>,
        dirs: DirectionSet,
        datum: impl Fn([f64; 2]) -> f64,
    ) -> Result<Self> {
        let boundary = (0..grid.len())
            .map(|k| if grid.is_interior(k) { 0.0 } else { datum(grid.coords(k)) })
            .collect();
        Self::new(params, grid, boundary, dirs)
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn dirs(&self) -> &DirectionSet {
        &self.dirs
    }
    pub fn boundary(&self) -> &[f64] {
        &self.boundary
    }
    /// `max φ` over carriers.
    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    /// Same data with other parameters (e.g. a different ε).
    pub fn with_params(&self, params: ProblemParams) -> Self {
        PenalizedProblem {
            params,
            ..self.clone()
        }
    }
}

/// Iteration used to reach the fixed point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// Damped explicit update from the previous iterate. Monotone and
    /// order-independent, but needs `O(N²)` sweeps on an `N`-node line.
    Jacobi,
    /// In-place sweep in node order, solving each local equation exactly.
    GaussSeidel,
    /// Semismooth Newton with pseudo-transient continuation.
    Newton,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    /// Stop once the sup-norm of one sweep's update is at most this.
    pub tol: f64,
    pub max_iters: usize,
    /// Fraction of the stable explicit step used by [`Sweep::Jacobi`].
    pub damping_safety: f64,
    /// Record progress every this many sweeps (0 disables).
    pub log_every: usize,
    pub sweep: Sweep,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iters: 1_000_000,
            damping_safety: 0.5,
            log_every: 1000,
            sweep: Sweep::Jacobi,
        }
    }
}

impl SolveOptions {
    pub fn newton() -> SolveOptions {
        SolveOptions {
            sweep: Sweep::Newton,
            log_every: 1,
            max_iters: 500,
            ..SolveOptions::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::ParameterDomain {
                field: "tol",
                value: self.tol,
                constraint: "tol > 0".into(),
            });
        }
        if !(self.damping_safety > 0.0 && self.damping_safety <= 1.0) {
            return Err(Error::ParameterDomain {
                field: "damping_safety",
                value: self.damping_safety,
                constraint: "0 < damping_safety <= 1".into(),
            });
        }
        if self.max_iters == 0 {
            return Err(Error::ParameterDomain {
                field: "max_iters",
                value: 0.0,
                constraint: "max_iters >= 1".into(),
            });
        }
        Ok(())
    }
}

/// One line of the progress log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProgressRecord {
    pub iteration: usize,
    pub update_sup: f64,
    pub residual_sup: f64,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub field: Field,
    pub iterations: usize,
    pub final_update_sup: f64,
    /// Sup of the penalized residual over interior nodes.
    pub residual_sup: f64,
    pub converged: bool,
    pub trace: Vec<ProgressRecord>,
    /// Smallest per-node increment seen at logged iterations; `≥ 0` means the
    /// iterates were pointwise nondecreasing there.
    pub min_increment: f64,
}

#[derive(Clone, Copy)]
enum Source<'a> {
    Constant(f64),
    Penalized(&'a ProblemParams),
}

impl Source<'_> {
    #[inline]
    fn value(&self, u: f64) -> f64 {
        match self {
            Source::Constant(c) => *c,
            Source::Penalized(p) => p.source(u),
        }
    }
    fn lipschitz(&self) -> f64 {
        match self {
            Source::Constant(_) => 0.0,
            Source::Penalized(p) => p.source_lipschitz(),
        }
    }
    #[inline]
    fn derivative(&self, u: f64) -> f64 {
        match self {
            Source::Constant(_) => 0.0,
            Source::Penalized(p) => p.source_derivative(u),
        }
    }
}

struct Relaxation<'a> {
    prob: &'a PenalizedProblem,
    kernel: Kernel,
    interior: Vec<usize>,
    source: Source<'a>,
    opts: &'a SolveOptions,
}

impl Relaxation<'_> {
    fn residual_sup(&self, values: &[f64]) -> f64 {
        let source = self.source;
        let r = residual_values(values, &self.prob.grid, &self.kernel, &move |u| source.value(u));
        r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn clamp(&self, v: f64) -> f64 {
        v.clamp(0.0, self.prob.upper)
    }

    fn jacobi_sweep(&self, old: &[f64], new: &mut [f64]) {
        let lip = self.source.lipschitz();
        let safety = self.opts.damping_safety;
        let updates: Vec<(usize, f64)> = self
            .interior
            .par_iter()
            .map(|&k| {
                let u = old[k];
                let nb = self.kernel.neighborhood(old, k);
                let lu = evaluate(u, &nb).value;
                let h = nb.min_len();
                let kappa = nb.steepness(u).max(h);
                let tau = safety * h * h / (6.0 * kappa * kappa + lip * h * h);
                (k, self.clamp(u + tau * (lu - self.source.value(u))))
            })
            .collect();
        for (k, v) in updates {
            new[k] = v;
        }
    }

    /// Root of `L(v) − rhs(v)` with the neighbors of `k` frozen, searched from
    /// `u` in the direction of the residual and clamped to `[0, max φ]`.
    fn local_solve(&self, values: &[f64], k: usize) -> f64 {
        let nb = self.kernel.neighborhood(values, k);
        let g = |v: f64| evaluate(v, &nb).value - self.source.value(v);
        let u = values[k];
        let g0 = g(u);
        if g0 == 0.0 {
            return u;
        }
        let upper = self.prob.upper;
        let (limit, up) = if g0 > 0.0 { (upper, true) } else { (0.0, false) };
        if u == limit {
            return u;
        }
        let dl = evaluate(u, &nb).d_u;
        let scale = (limit - u).abs();
        let mut step = (g0 / dl.abs().max(f64::MIN_POSITIVE)).abs().min(scale).max(1e-16 * scale);
        let mut lo = u;
        let mut hi;
        loop {
            let next = if up { (u + step).min(limit) } else { (u - step).max(limit) };
            let gn = g(next);
            if gn == 0.0 {
                return next;
            }
            if (gn > 0.0) != (g0 > 0.0) {
                hi = next;
                break;
            }
            lo = next;
            if next == limit {
                return limit;
            }
            step *= 4.0;
        }
        let mut glo = g(lo);
        let mut ghi = g(hi);
        for _ in 0..200 {
            let mid = if (hi - lo).abs() > 1e-3 * scale {
                0.5 * (lo + hi)
            } else {
                let t = glo / (glo - ghi);
                lo + t.clamp(0.05, 0.95) * (hi - lo)
            };
            if mid == lo || mid == hi {
                break;
            }
            let gm = g(mid);
            if gm == 0.0 {
                return mid;
            }
            if (gm > 0.0) == (glo > 0.0) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
                ghi = gm;
            }
        }
        if glo.abs() <= ghi.abs() {
            lo
        } else {
            hi
        }
    }

    fn gauss_seidel_sweep(&self, values: &mut [f64]) {
        for &k in &self.interior {
            values[k] = self.local_solve(values, k);
        }
    }

    /// Residual `L_h u − rhs(u)` at interior nodes, with nodes held at a
    /// clamp bound and pushing past it counted as satisfied.
    fn projected_residual(&self, values: &[f64]) -> Vec<f64> {
        let upper = self.prob.upper;
        let source = self.source;
        let mut r = residual_values(values, &self.prob.grid, &self.kernel, &move |u| source.value(u));
        for &k in &self.interior {
            let (u, f) = (values[k], r[k]);
            if (u <= 0.0 && f < 0.0) || (u >= upper && f > 0.0) {
                r[k] = 0.0;
            }
        }
        r
    }

    fn merit(residual: &[f64]) -> f64 {
        residual.iter().map(|v| v * v).sum()
    }

    /// Newton direction at `values` given its projected residual.
    fn newton_direction(
        &self,
        values: &[f64],
        residual: &[f64],
        shift: f64,
        jac: &mut BandMatrix,
    ) -> Option<Vec<f64>> {
        let n = values.len();
        let mask = self.prob.grid.interior_mask();
        let rows: Vec<(usize, Eval)> = self
            .interior
            .par_iter()
            .map(|&k| (k, evaluate(values[k], &self.kernel.neighborhood(values, k))))
            .collect();
        let floor = 1e-10 * rows.iter().fold(0.0f64, |m, r| m.max(r.1.d_u.abs())) + f64::MIN_POSITIVE;
        jac.clear();
        let mut rhs = vec![0.0; n];
        let mut active = vec![true; n];
        for &k in &self.interior {
            active[k] = residual[k] == 0.0 && (values[k] <= 0.0 || values[k] >= self.prob.upper);
        }
        for k in 0..n {
            if !mask[k] || active[k] {
                jac.add(k, k, 1.0);
            }
        }
        for (k, e) in rows {
            if active[k] {
                continue;
            }
            jac.add(k, k, e.d_u.min(-floor) - self.source.derivative(values[k]) - shift);
            if mask[e.kmax] && !active[e.kmax] {
                jac.add(k, e.kmax, e.d_max);
            }
            if mask[e.kmin] && !active[e.kmin] {
                jac.add(k, e.kmin, e.d_min);
            }
            rhs[k] = -residual[k];
        }
        jac.solve_in_place(&mut rhs).then_some(rhs)
    }

    fn run_newton(
        &self,
        mut current: Vec<f64>,
        sink: &mut dyn FnMut(&ProgressRecord),
    ) -> Result<SolveResult> {
        let n = current.len();
        let bw = self.kernel.bandwidth();
        let mut jac = BandMatrix::zeros(n, bw, bw);
        let mut trace = Vec::new();
        let mut min_increment = f64::INFINITY;
        let mut update = f64::INFINITY;
        let mut residual = self.projected_residual(&current);
        let mut merit = Self::merit(&residual);
        let mut trial = current.clone();

        let h = self.prob.grid.h();
        let slope = self.prob.upper.max(f64::MIN_POSITIVE) / self.prob.grid.radius();
        let base_shift = slope * slope / (h * h);
        let mut shift = 1e-2 * base_shift;

        for it in 1..=self.opts.max_iters {
            let (next_residual, next_merit) = loop {
                let Some(dir) = self.newton_direction(&current, &residual, shift, &mut jac) else {
                    return Err(Error::NonFinite { iteration: it, node: 0 });
                };
                if let Some(node) = dir.iter().position(|d| !d.is_finite()) {
                    return Err(Error::NonFinite { iteration: it, node });
                }
                for &k in &self.interior {
                    trial[k] = self.clamp(current[k] + dir[k]);
                }
                let r = self.projected_residual(&trial);
                let m = Self::merit(&r);
                if m <= 4.0 * merit || shift > 1e30 {
                    if merit > 0.0 {
                        shift *= (m / merit).sqrt().min(0.5);
                    }
                    break (r, m);
                }
                shift = (10.0 * shift).max(1e-2 * base_shift);
            };
            let mut up: f64 = 0.0;
            let mut inc = f64::INFINITY;
            for &k in &self.interior {
                let d = trial[k] - current[k];
                up = up.max(d.abs());
                inc = inc.min(d);
            }
            std::mem::swap(&mut current, &mut trial);
            residual = next_residual;
            merit = next_merit;
            update = up;
            if self.opts.log_every > 0 && it % self.opts.log_every == 0 {
                min_increment = min_increment.min(inc);
                let rec = ProgressRecord {
                    iteration: it,
                    update_sup: update,
                    residual_sup: residual.iter().fold(0.0, |m, v| m.max(v.abs())),
                };
                sink(&rec);
                trace.push(rec);
            }
            if update <= self.opts.tol {
                return self.finish(current, it, update, trace, min_increment);
            }
        }
        Err(Error::NonConvergence {
            iterations: self.opts.max_iters,
            update_sup: update,
            residual_sup: self.residual_sup(&current),
            trace,
        })
    }

    fn finish(
        &self,
        values: Vec<f64>,
        iterations: usize,
        update: f64,
        trace: Vec<ProgressRecord>,
        min_increment: f64,
    ) -> Result<SolveResult> {
        let residual_sup = self.residual_sup(&values);
        Ok(SolveResult {
            field: Field::from_values(self.prob.grid.clone(), values)?,
            iterations,
            final_update_sup: update,
            residual_sup,
            converged: true,
            trace,
            min_increment,
        })
    }

    fn run(
        &self,
        current: Vec<f64>,
        sink: &mut dyn FnMut(&ProgressRecord),
    ) -> Result<SolveResult> {
        match self.opts.sweep {
            Sweep::Jacobi | Sweep::GaussSeidel => self.run_sweeps(current, sink),
            Sweep::Newton => self.run_newton(current, sink),
        }
    }

    fn run_sweeps(
        &self,
        mut current: Vec<f64>,
        sink: &mut dyn FnMut(&ProgressRecord),
    ) -> Result<SolveResult> {
        let mut scratch = current.clone();
        let mut trace = Vec::new();
        let mut min_increment = f64::INFINITY;
        let mut update = f64::INFINITY;
        let log_every = self.opts.log_every;

        for it in 1..=self.opts.max_iters {
            let logging = log_every > 0 && it % log_every == 0;
            if self.opts.sweep == Sweep::GaussSeidel {
                scratch.copy_from_slice(&current);
                self.gauss_seidel_sweep(&mut scratch);
            } else {
                self.jacobi_sweep(&current, &mut scratch);
            }
            let mut up: f64 = 0.0;
            let mut inc = f64::INFINITY;
            for &k in &self.interior {
                if !scratch[k].is_finite() {
                    return Err(Error::NonFinite { iteration: it, node: k });
                }
                let d = scratch[k] - current[k];
                up = up.max(d.abs());
                inc = inc.min(d);
            }
            std::mem::swap(&mut current, &mut scratch);
            update = up;
            if logging {
                min_increment = min_increment.min(inc);
                let rec = ProgressRecord {
                    iteration: it,
                    update_sup: update,
                    residual_sup: self.residual_sup(&current),
                };
                sink(&rec);
                trace.push(rec);
            }
            if update <= self.opts.tol {
                return self.finish(current, it, update, trace, min_increment);
            }
        }
        Err(Error::NonConvergence {
            iterations: self.opts.max_iters,
            update_sup: update,
            residual_sup: self.residual_sup(&current),
            trace,
        })
    }
}

fn relax(
    prob: &PenalizedProblem,
    init: &[f64],
    source: Source<'_>,
    opts: &SolveOptions,
    sink: &mut dyn FnMut(&ProgressRecord),
) -> Result<SolveResult> {
    opts.validate()?;
    let grid = &prob.grid;
    if init.len() != grid.len() {
        return Err(Error::Grid(format!(
            "initial field has {} values for {} nodes",
            init.len(),
            grid.len()
        )));
    }
    let relaxation = Relaxation {
        prob,
        kernel: Kernel::new(grid, &prob.dirs)?,
        interior: grid.interior_nodes().collect(),
        source,
        opts,
    };
    let start: Vec<f64> = (0..grid.len())
        .map(|k| {
            if grid.is_interior(k) {
                relaxation.clamp(init[k])
            } else {
                prob.boundary[k]
            }
        })
        .collect();
    relaxation.run(start, sink)
}

/// Harmonic (five-point Laplace) extension of the carrier data, a smooth
/// starting point for Newton.
fn laplace_extension(prob: &PenalizedProblem) -> Vec<f64> {
    let grid = &prob.grid;
    let n = grid.len();
    let row = grid.shape()[0];
    let bw = if grid.dim() == 1 { 1 } else { row };
    let mut a = BandMatrix::zeros(n, bw, bw);
    let mut b = vec![0.0; n];
    let shifts: Vec<[i32; 2]> = if grid.dim() == 1 {
        vec![[-1, 0], [1, 0]]
    } else {
        vec![[-1, 0], [1, 0], [0, -1], [0, 1]]
    };
    for k in 0..n {
        if grid.is_interior(k) {
            a.add(k, k, -(shifts.len() as f64));
            for &d in &shifts {
                if let Some(m) = grid.shifted(k, d) {
                    if grid.is_interior(m) {
                        a.add(k, m, 1.0);
                    } else {
                        b[k] -= prob.boundary[m];
                    }
                }
            }
        } else {
            a.add(k, k, 1.0);
            b[k] = prob.boundary[k];
        }
    }
    if a.solve_in_place(&mut b) && b.iter().all(|v| v.is_finite()) {
        b
    } else {
        vec![0.0; n]
    }
}

fn starting_guess(prob: &PenalizedProblem, opts: &SolveOptions, flat: f64) -> Vec<f64> {
    match opts.sweep {
        Sweep::Jacobi | Sweep::GaussSeidel => vec![flat; prob.grid.len()],
        Sweep::Newton => laplace_extension(prob),
    }
}

/// Discrete solution of `L_h u = S` with `S = (δε^α/2)^(−γ) ≥ sup rhs`,
/// clamped at zero; a subsolution of the penalized problem.
pub fn make_subsolution(prob: &PenalizedProblem, opts: &SolveOptions) -> Result<Field> {
    let s = prob.params.source_sup_bound();
    let init = starting_guess(prob, opts, 0.0);
    Ok(relax(prob, &init, Source::Constant(s), opts, &mut |_| {})?.field)
}

/// Discrete infinity-harmonic extension of the boundary data.
pub fn make_supersolution(prob: &PenalizedProblem, opts: &SolveOptions) -> Result<Field> {
    let init = starting_guess(prob, opts, prob.upper);
    Ok(relax(prob, &init, Source::Constant(0.0), opts, &mut |_| {})?.field)
}

/// Least discrete solution above [`make_subsolution`].
pub fn solve_penalized(prob: &PenalizedProblem, opts: &SolveOptions) -> Result<SolveResult> {
    let sub = make_subsolution(prob, opts)?;
    solve_penalized_from(prob, &sub, opts)
}

/// Relaxes the penalized problem from an arbitrary start (carriers are reset).
pub fn solve_penalized_from(
    prob: &PenalizedProblem,
    init: &Field,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    solve_penalized_with_sink(prob, init, opts, &mut |_| {})
}

/// As [`solve_penalized_from`], streaming progress records to `sink`.
pub fn solve_penalized_with_sink(
    prob: &PenalizedProblem,
    init: &Field,
    opts: &SolveOptions,
    sink: &mut dyn FnMut(&ProgressRecord),
) -> Result<SolveResult> {
    relax(prob, init.values(), Source::Penalized(&prob.params), opts, sink)
}

/// Sup-norm distances between successive ε-solutions.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ConvergenceTrace {
    pub epsilons: Vec<f64>,
    pub iterations: Vec<usize>,
    pub residual_sups: Vec<f64>,
    /// `‖u_{ε_k} − u_{ε_{k+1}}‖∞`
    pub sup_differences: Vec<f64>,
    /// Successive ratios of `sup_differences`.
    pub ratios: Vec<f64>,
    /// Strictly decreasing differences.
    pub cauchy: bool,
}

/// Solves along a decreasing ε sequence, warm-starting each step.
pub fn solve_limit(
    template: &ProblemTemplate,
    eps_sequence: &[f64],
    opts: &SolveOptions,
) -> Result<(Field, ConvergenceTrace)> {
    solve_limit_with_sink(template, eps_sequence, opts, &mut |_, _| {})
}

/// As [`solve_limit`]; `sink` receives the stage index with each record.
pub fn solve_limit_with_sink(
    template: &ProblemTemplate,
    eps_sequence: &[f64],
    opts: &SolveOptions,
    sink: &mut dyn FnMut(usize, &ProgressRecord),
) -> Result<(Field, ConvergenceTrace)> {
    if eps_sequence.is_empty() {
        return Err(Error::InsufficientData("empty epsilon sequence".into()));
    }
    if eps_sequence.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::ParameterDomain {
            field: "eps_sequence",
            value: f64::NAN,
            constraint: "strictly decreasing".into(),
        });
    }
    let mut trace = ConvergenceTrace::default();
    let mut previous: Option<Field> = None;
    for (stage, &eps) in eps_sequence.iter().enumerate() {
        let prob = template.instantiate(eps)?;
        let mut stage_sink = |r: &ProgressRecord| sink(stage, r);
        let result = match &previous {
            None => {
                let sub = make_subsolution(&prob, opts)?;
                solve_penalized_with_sink(&prob, &sub, opts, &mut stage_sink)?
            }
            Some(prev) => solve_penalized_with_sink(&prob, prev, opts, &mut stage_sink)?,
        };
        if let Some(prev) = &previous {
            trace.sup_differences.push(prev.sup_distance(&result.field));
        }
        trace.epsilons.push(eps);
        trace.iterations.push(result.iterations);
        trace.residual_sups.push(result.residual_sup);
        previous = Some(result.field);
    }
    trace.ratios = trace
        .sup_differences
        .windows(2)
        .map(|w| w[1] / w[0])
        .collect();
    trace.cauchy = trace.sup_differences.windows(2).all(|w| w[1] < w[0]);
    Ok((previous.expect("non-empty sequence"), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_params;

    fn line_problem(gamma: f64, eps: f64, h: f64, datum: impl Fn([f64; 2]) -> f64) -> PenalizedProblem {
        let p = derive_params(gamma, eps, None).unwrap();
        let g = Arc::new(Grid::interval(1.0, h).unwrap());
        PenalizedProblem::from_fn(p, g, DirectionSet::line(), datum).unwrap()
    }

    #[test]
    fn zero_data_gives_zero() {
        let prob = line_problem(0.5, 0.1, 0.05, |_| 0.0);
        let res = solve_penalized(&prob, &SolveOptions::default()).unwrap();
        assert!(res.converged);
        assert!(res.field.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_data_supersolution_is_constant() {
        let prob = line_problem(0.0, 0.1, 0.05, |_| 0.7);
        let sup = make_supersolution(&prob, &SolveOptions::default()).unwrap();
        assert!(sup.values().iter().all(|&v| (v - 0.7).abs() < 1e-9));
    }

    #[test]
    fn affine_data_supersolution_is_linear() {
        let prob = line_problem(0.0, 0.1, 0.05, |x| 0.5 * (x[0] + 1.0));
        let sup = make_supersolution(&prob, &SolveOptions::default()).unwrap();
        for k in 0..sup.grid().len() {
            let x = sup.grid().coords(k)[0];
            assert!((sup.get(k) - 0.5 * (x + 1.0)).abs() < 1e-6, "x {x}");
        }
    }

    #[test]
    fn rejects_negative_boundary_and_bad_options() {
        let p = derive_params(0.0, 0.1, None).unwrap();
        let g = Arc::new(Grid::interval(1.0, 0.25).unwrap());
        assert!(PenalizedProblem::from_fn(p, g.clone(), DirectionSet::line(), |_| -1.0).is_err());
        let prob = PenalizedProblem::from_fn(p, g, DirectionSet::line(), |_| 1.0).unwrap();
        let bad = SolveOptions { tol: 0.0, ..SolveOptions::default() };
        assert!(solve_penalized(&prob, &bad).is_err());
        let bad = SolveOptions { damping_safety: 1.5, ..SolveOptions::default() };
        assert!(solve_penalized(&prob, &bad).is_err());
    }

    #[test]
    fn non_convergence_reports_trace() {
        let prob = line_problem(0.0, 0.1, 0.02, |x| 0.5 * (x[0] + 1.0));
        let opts = SolveOptions { max_iters: 20, log_every: 5, ..SolveOptions::default() };
        match make_supersolution(&prob, &opts) {
            Err(Error::NonConvergence { iterations, trace, .. }) => {
                assert_eq!(iterations, 20);
                assert_eq!(trace.len(), 4);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}

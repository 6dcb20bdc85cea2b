//! C interface to the solver.
//!
//! All functions return an [`InflapStatus`]; results come back through out
//! pointers. Objects are opaque handles created by `*_new`/`*_from_*`
//! functions and released with the matching `*_free`. On failure the message
//! is kept per thread and can be copied out with
//! [`inflap_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use inflap::analysis::{density_check, growth_exponent_fit, limit_threshold, dyadic_radii};
use inflap::cli::{parse_config, Overrides, RunConfig};
use inflap::closed_forms::{radial_exact, verify_supersolution, BarrierSpec};
use inflap::discrete::Field;
use inflap::model::rhs;
use inflap::solver::{solve_limit, solve_penalized};
use inflap::{derive_params, max_admissible_delta, Error, ProblemParams};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InflapStatus {
    Ok = 0,
    NullPointer = 1,
    ParameterDomain = 2,
    SingularPoint = 3,
    Grid = 4,
    NotInterior = 5,
    NonConvergence = 6,
    NonFinite = 7,
    InsufficientData = 8,
    Config = 9,
    Io = 10,
    InvalidUtf8 = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

/// Model parameters.
pub struct InflapParams(ProblemParams);

/// A configured problem, parsed from a TOML run configuration.
pub struct InflapProblem(RunConfig);

/// A solved nodal field together with the parameters it was solved at.
pub struct InflapField {
    field: Field,
    params: ProblemParams,
}

/// Derived constants of an [`InflapParams`].
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct InflapParamsInfo {
    pub gamma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub c_alpha: f64,
}

/// Solver statistics.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct InflapSolveInfo {
    pub iterations: usize,
    pub residual_sup: f64,
    /// Final ε (the last one of a continuation).
    pub epsilon: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> InflapStatus {
    match e {
        Error::ParameterDomain { .. } => InflapStatus::ParameterDomain,
        Error::SingularPoint(_) => InflapStatus::SingularPoint,
        Error::Grid(_) => InflapStatus::Grid,
        Error::NotInterior { .. } => InflapStatus::NotInterior,
        Error::NonConvergence { .. } => InflapStatus::NonConvergence,
        Error::NonFinite { .. } => InflapStatus::NonFinite,
        Error::InsufficientData(_) => InflapStatus::InsufficientData,
        Error::Config { .. } => InflapStatus::Config,
        Error::Io(_) => InflapStatus::Io,
    }
}

struct Fail(InflapStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(InflapStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> InflapStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => InflapStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            InflapStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`) and returns the full length including the
/// terminator. Pass `len = 0` to query the size.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null when `len` is 0.
#[no_mangle]
pub unsafe extern "C" fn inflap_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Largest δ for which the barrier is a supersolution.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn inflap_max_admissible_delta(gamma: f64, out: *mut f64) -> InflapStatus {
    guard(|| write(out, max_admissible_delta(gamma)?, "out"))
}

/// Creates parameters; a non-positive or NaN `delta` selects the default.
///
/// # Safety
/// `out` must be a valid pointer; the handle is released with [`inflap_params_free`].
#[no_mangle]
pub unsafe extern "C" fn inflap_params_new(
    gamma: f64,
    epsilon: f64,
    delta: f64,
    out: *mut *mut InflapParams,
) -> InflapStatus {
    guard(|| {
        let d = (delta > 0.0).then_some(delta);
        let p = derive_params(gamma, epsilon, d)?;
        write(out, Box::into_raw(Box::new(InflapParams(p))), "out")
    })
}

/// # Safety
/// `p` must come from [`inflap_params_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn inflap_params_free(p: *mut InflapParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn inflap_params_info(
    p: *const InflapParams,
    out: *mut InflapParamsInfo,
) -> InflapStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        let info = InflapParamsInfo {
            gamma: p.gamma(),
            epsilon: p.epsilon(),
            delta: p.delta(),
            alpha: p.alpha(),
            sigma: p.sigma(),
            c_alpha: p.c_alpha(),
        };
        write(out, info, "out")
    })
}

/// Penalized right-hand side at `s ≥ 0`.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn inflap_rhs(p: *const InflapParams, s: f64, out: *mut f64) -> InflapStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        write(out, rhs(s, p)?, "out")
    })
}

/// Exact radial solution `C_α (s+ε)^α`.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn inflap_radial_exact(
    p: *const InflapParams,
    s: f64,
    out: *mut f64,
) -> InflapStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        write(out, radial_exact(s, p), "out")
    })
}

/// Samples the barrier supersolution inequality at `samples` radii.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn inflap_barrier_verify(
    p: *const InflapParams,
    eta: f64,
    samples: usize,
    max_violation: *mut f64,
    passed: *mut c_int,
) -> InflapStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        let rep = verify_supersolution(&BarrierSpec::new(eta, *p)?, samples)?;
        write(max_violation, rep.max_violation, "max_violation")?;
        write(passed, c_int::from(rep.passed), "passed")
    })
}

/// Parses a TOML run configuration (same format as the command-line tool).
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer; the
/// handle is released with [`inflap_problem_free`].
#[no_mangle]
pub unsafe extern "C" fn inflap_problem_from_toml(
    toml: *const c_char,
    out: *mut *mut InflapProblem,
) -> InflapStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        let text = CStr::from_ptr(toml)
            .to_str()
            .map_err(|e| Fail(InflapStatus::InvalidUtf8, e.to_string()))?;
        let cfg = parse_config(text, &Overrides::default())?;
        write(out, Box::into_raw(Box::new(InflapProblem(cfg))), "out")
    })
}

/// # Safety
/// `p` must come from [`inflap_problem_from_toml`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn inflap_problem_free(p: *mut InflapProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Solves the problem, running the ε-continuation when one is configured.
///
/// # Safety
/// `problem` and `out` must be valid; `info` may be null. The field is
/// released with [`inflap_field_free`].
#[no_mangle]
pub unsafe extern "C" fn inflap_solve(
    problem: *const InflapProblem,
    out: *mut *mut InflapField,
    info: *mut InflapSolveInfo,
) -> InflapStatus {
    guard(|| {
        let cfg = &deref(problem, "problem")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let template = cfg.template()?;
        let eps = cfg.epsilons();
        let (field, stats) = if eps.len() == 1 {
            let res = solve_penalized(&template.problem()?, &cfg.solver)?;
            let stats = InflapSolveInfo {
                iterations: res.iterations,
                residual_sup: res.residual_sup,
                epsilon: eps[0],
            };
            (res.field, stats)
        } else {
            let (field, trace) = solve_limit(&template, &eps, &cfg.solver)?;
            let stats = InflapSolveInfo {
                iterations: trace.iterations.iter().sum(),
                residual_sup: trace.residual_sups.last().copied().unwrap_or(f64::NAN),
                epsilon: eps[eps.len() - 1],
            };
            (field, stats)
        };
        let params = cfg.params()?.with_epsilon(stats.epsilon)?;
        if !info.is_null() {
            info.write(stats);
        }
        out.write(Box::into_raw(Box::new(InflapField { field, params })));
        Ok(())
    })
}

/// # Safety
/// `f` must come from [`inflap_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn inflap_field_free(f: *mut InflapField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Number of nodes and spatial dimension.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn inflap_field_shape(
    f: *const InflapField,
    len: *mut usize,
    dim: *mut usize,
) -> InflapStatus {
    guard(|| {
        let f = deref(f, "field")?;
        write(len, f.field.grid().len(), "len")?;
        write(dim, f.field.grid().dim(), "dim")
    })
}

/// Copies the nodal values (grid order) into `buf`, which must hold at least
/// as many values as the field has nodes.
///
/// # Safety
/// `buf` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn inflap_field_values(
    f: *const InflapField,
    buf: *mut f64,
    len: usize,
) -> InflapStatus {
    guard(|| {
        let f = deref(f, "field")?;
        let vals = f.field.values();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < vals.len() {
            return Err(Fail(
                InflapStatus::BufferTooSmall,
                format!("buffer holds {len} values, field has {}", vals.len()),
            ));
        }
        ptr::copy_nonoverlapping(vals.as_ptr(), buf, vals.len());
        Ok(())
    })
}

/// Coordinates of node `k`; `y` is 0 in 1D.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn inflap_field_coords(
    f: *const InflapField,
    k: usize,
    x: *mut f64,
    y: *mut f64,
) -> InflapStatus {
    guard(|| {
        let f = deref(f, "field")?;
        let grid = f.field.grid();
        if k >= grid.len() {
            return Err(Fail(InflapStatus::Grid, format!("node {k} out of range")));
        }
        let [cx, cy] = grid.coords(k);
        write(x, cx, "x")?;
        write(y, cy, "y")
    })
}

/// Growth exponent fitted at node `center` over dyadic radii in `[4h, R/2]`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn inflap_field_growth_exponent(
    f: *const InflapField,
    center: usize,
    alpha_est: *mut f64,
    r_squared: *mut f64,
) -> InflapStatus {
    guard(|| {
        let f = deref(f, "field")?;
        let grid = f.field.grid();
        if center >= grid.len() {
            return Err(Fail(InflapStatus::Grid, format!("node {center} out of range")));
        }
        let radii = dyadic_radii(4.0 * grid.h(), 0.5 * grid.radius());
        let fit = growth_exponent_fit(&f.field, center, &radii)?;
        write(alpha_est, fit.alpha_est, "alpha_est")?;
        write(r_squared, fit.r_squared, "r_squared")
    })
}

/// Smallest density ratio of the positivity set in balls of radius `kappa`
/// around the zero side of the free boundary.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn inflap_field_density_min(
    f: *const InflapField,
    kappa: f64,
    out: *mut f64,
) -> InflapStatus {
    guard(|| {
        let f = deref(f, "field")?;
        let rep = density_check(&f.field, kappa, limit_threshold(&f.field))?;
        write(out, rep.get("density_ratio_min").unwrap_or(f64::NAN), "out")
    })
}

/// `α = 4/(3+γ)` of the parameters the field was solved with.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn inflap_field_alpha(f: *const InflapField, out: *mut f64) -> InflapStatus {
    guard(|| {
        let f = deref(f, "field")?;
        write(out, f.params.alpha(), "out")
    })
}

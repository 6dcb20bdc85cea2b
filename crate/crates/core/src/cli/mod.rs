//! Command-line front end.
//!
//! Every command writes into `<output_dir>/<command>-<hash>`, where the hash
//! is taken over the resolved config, so distinct runs never share a
//! directory and reruns overwrite their own:
//!
//! * `field.csv`: header `x,u` or `x,y,u`, one row per node in grid order,
//!   values in `{:.16e}`;
//! * `summary.json`: `alpha`, `alpha_est`, `C_emp`, `c_emp`,
//!   `density_ratio_min`, `porosity_tau`, `iterations`, `residual_sup`,
//!   `converged`, `passed`, `checks` and the resolved `config`;
//! * `reports/<check>.json`: one report per check;
//! * `progress.jsonl`: solver progress records;
//! * `diagnostics.json`: written instead of a field when the solver fails.
//!
//! The exit status is 0 when every requested check passes, 1 when one fails
//! and 2 when the run could not complete.

pub mod config;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{
    contact_set, density_check, dyadic_radii, flatness_growth_check, gradient_at_fb_check,
    growth_exponent_fit, limit_threshold, lipschitz_check, nondegeneracy_check,
    oscillation_check, porosity_estimate, scaling_residual_check, AnalysisReport, FitResult,
};
use crate::closed_forms::{radial_ode_residual_with, radial_profile, verify_supersolution, BarrierSpec};
use crate::discrete::{DirectionSet, Field};
use crate::error::{Error, Result};
use crate::model::ProblemParams;
use crate::solver::{
    make_subsolution, solve_limit_with_sink, solve_penalized_with_sink, ConvergenceTrace,
    ProgressRecord,
};
pub use config::{load_config, parse_config, CheckName, Overrides, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Solve the penalized problem (or the ε-continuation) and dump the field.
    Solve,
    /// Sample the barrier supersolution inequality for each configured η.
    VerifyBarrier,
    /// Check the radial ODE identity of the exact solution family.
    VerifyRadial,
    /// Solve, then run the configured analysis checks.
    Analyze,
    /// Repeat the growth-exponent fit over a list of γ.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::VerifyBarrier => "verify-barrier",
            Command::VerifyRadial => "verify-radial",
            Command::Analyze => "analyze",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "inflap", version, about = "Penalized singular infinity-Laplacian experiments")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output root; overrides `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for the solver and analysis scans.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Grid spacing; overrides `h`.
    #[arg(long)]
    pub h: Option<f64>,
    /// Exponent; overrides `gamma`.
    #[arg(long)]
    pub gamma: Option<f64>,
}

/// Where a finished run left its artifacts.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub passed: bool,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let overrides = Overrides {
        h: cli.h,
        gamma: cli.gamma,
        out: cli.out.clone(),
    };
    let cfg = match load_config(&cli.config, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let threads = cli.threads.or(cfg.deterministic.then_some(1));
    if let Some(n) = threads {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli.command, &cfg) {
        Ok(out) => {
            println!("{} {}", if out.passed { "passed" } else { "FAILED" }, out.dir.display());
            i32::from(!out.passed)
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Hex SHA-256 prefix of the command and the resolved config.
pub fn run_id(cmd: Command, cfg: &RunConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(cmd.name().as_bytes());
    hasher.update(b"\n");
    hasher.update(serde_json::to_string(cfg).expect("config serializes").as_bytes());
    let digest = hasher.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn run_dir(cmd: Command, cfg: &RunConfig) -> PathBuf {
    let root = if cfg.output_dir.is_absolute() {
        cfg.output_dir.clone()
    } else {
        cfg.base_dir.join(&cfg.output_dir)
    };
    root.join(format!("{}-{}", cmd.name(), run_id(cmd, cfg)))
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome> {
    let dir = run_dir(cmd, cfg);
    fs::create_dir_all(dir.join("reports"))?;
    let passed = match cmd {
        Command::Solve => solve_cmd(cfg, &dir, false)?,
        Command::Analyze => solve_cmd(cfg, &dir, true)?,
        Command::VerifyBarrier => verify_barrier_cmd(cfg, &dir)?,
        Command::VerifyRadial => verify_radial_cmd(cfg, &dir)?,
        Command::Sweep => sweep_cmd(cfg, &dir)?,
    };
    Ok(Outcome { dir, passed })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Writes `field` as CSV with 17 significant digits.
pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    let grid = field.grid();
    let mut w = BufWriter::new(File::create(path)?);
    if grid.dim() == 1 {
        writeln!(w, "x,u")?;
    } else {
        writeln!(w, "x,y,u")?;
    }
    for k in 0..grid.len() {
        let [x, y] = grid.coords(k);
        if grid.dim() == 1 {
            writeln!(w, "{x:.16e},{:.16e}", field.get(k))?;
        } else {
            writeln!(w, "{x:.16e},{y:.16e},{:.16e}", field.get(k))?;
        }
    }
    w.flush()?;
    Ok(())
}

struct Solved {
    field: Field,
    params: ProblemParams,
    iterations: usize,
    residual_sup: f64,
    continuation: Option<ConvergenceTrace>,
}

fn solve_config(cfg: &RunConfig, dir: &Path) -> Result<Solved> {
    let template = cfg.template()?;
    let eps = cfg.epsilons();
    let mut log = BufWriter::new(File::create(dir.join("progress.jsonl"))?);
    let mut io_error = None;
    let mut record = |stage: usize, r: &ProgressRecord| {
        let line = json!({
            "stage": stage,
            "epsilon": eps[stage],
            "iteration": r.iteration,
            "update_sup": r.update_sup,
            "residual_sup": r.residual_sup,
        });
        if let Err(e) = writeln!(log, "{line}") {
            io_error.get_or_insert(e);
        }
    };
    let outcome = if eps.len() == 1 {
        let prob = template.problem()?;
        make_subsolution(&prob, &cfg.solver)
            .and_then(|sub| solve_penalized_with_sink(&prob, &sub, &cfg.solver, &mut |r| record(0, r)))
            .map(|res| Solved {
                params: *prob.params(),
                iterations: res.iterations,
                residual_sup: res.residual_sup,
                field: res.field,
                continuation: None,
            })
    } else {
        solve_limit_with_sink(&template, &eps, &cfg.solver, &mut record).map(|(field, trace)| {
            let last = eps.len() - 1;
            Solved {
                params: cfg.params().expect("validated").with_epsilon(eps[last]).expect("validated"),
                iterations: trace.iterations.iter().sum(),
                residual_sup: trace.residual_sups[last],
                field,
                continuation: Some(trace),
            }
        })
    };
    log.flush()?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    outcome.map_err(|e| {
        let mut diag = json!({ "error": e.to_string(), "config": cfg });
        if let Error::NonConvergence { iterations, update_sup, residual_sup, trace } = &e {
            diag["iterations"] = json!(iterations);
            diag["update_sup"] = json!(update_sup);
            diag["residual_sup"] = json!(residual_sup);
            diag["trace"] = json!(trace);
        }
        match write_json(&dir.join("diagnostics.json"), &diag) {
            Ok(()) => e,
            Err(io) => io,
        }
    })
}

fn default_radii(cfg: &RunConfig) -> Vec<f64> {
    cfg.analysis
        .radii
        .clone()
        .unwrap_or_else(|| dyadic_radii(4.0 * cfg.h, 0.5 * cfg.radius))
}

/// Growth fits of `u − min u` at the zero side of the free boundary, or at
/// the minimum node when the field has no zero set.
fn growth_report(f: &Field, p: &ProblemParams, radii: &[f64]) -> AnalysisReport {
    let grid = f.grid();
    let threshold = limit_threshold(f);
    let mut centers: Vec<usize> = contact_set(f, threshold).map(|s| s.iter().collect()).unwrap_or_default();
    if centers.is_empty() {
        let argmin = (0..grid.len()).fold(0, |best, k| if f.get(k) < f.get(best) { k } else { best });
        centers.push(argmin);
    }
    let floor = centers.iter().map(|&k| f.get(k)).fold(f64::INFINITY, f64::min);
    let shifted = f.map(|v| v - floor);
    let fits: Vec<(usize, FitResult)> = centers
        .iter()
        .filter_map(|&k| growth_exponent_fit(&shifted, k, radii).ok().map(|fit| (k, fit)))
        .collect();
    if fits.is_empty() {
        return AnalysisReport::unavailable("growth", "no center admits three radii >= 4h with positive sup");
    }
    let n = fits.len() as f64;
    let mean = fits.iter().map(|(_, fit)| fit.alpha_est).sum::<f64>() / n;
    let (worst_k, worst) = fits
        .iter()
        .map(|(k, fit)| (*k, fit))
        .fold(None::<(usize, &FitResult)>, |acc, (k, fit)| match acc {
            Some((_, b)) if (b.alpha_est - p.alpha()).abs() >= (fit.alpha_est - p.alpha()).abs() => acc,
            _ => Some((k, fit)),
        })
        .expect("nonempty");
    let min_r2 = fits.iter().map(|(_, fit)| fit.r_squared).fold(1.0, f64::min);
    let rel = (worst.alpha_est / p.alpha() - 1.0).abs();
    let mut rep = AnalysisReport::new("growth")
        .worst(grid, Some(worst_k), worst.alpha_est)
        .constant("alpha_est", mean)
        .constant("c_est", worst.c_est)
        .constant("max_relative_error", rel)
        .constant("min_r_squared", min_r2)
        .constant("centers", n)
        .param("radii", radii.len() as f64)
        .params_of(p);
    rep.passed = rel <= 0.10 && min_r2 >= 0.99;
    rep
}

fn run_check(name: CheckName, f: &Field, p: &ProblemParams, cfg: &RunConfig) -> Vec<AnalysisReport> {
    let threshold = limit_threshold(f);
    let rho_max = cfg.analysis.rho_max.unwrap_or(0.25 * cfg.radius);
    let kappa = cfg.analysis.kappa.unwrap_or(0.125 * cfg.radius);
    let dirs = DirectionSet::new(cfg.stencil());
    let named = |r: Result<AnalysisReport>| {
        r.unwrap_or_else(|e| AnalysisReport::unavailable(name.as_str(), e.to_string()))
    };
    match name {
        CheckName::Growth => vec![growth_report(f, p, &default_radii(cfg))],
        CheckName::Oscillation => vec![oscillation_check(f, p, cfg.analysis.kappa_0)],
        CheckName::Nondegeneracy => vec![nondegeneracy_check(f, p)],
        CheckName::Flatness => vec![flatness_growth_check(f, p, rho_max)],
        CheckName::Gradient => vec![gradient_at_fb_check(f, p)],
        CheckName::Density => vec![named(density_check(f, kappa, threshold))],
        CheckName::Porosity => vec![named(porosity_estimate(f, p, threshold, rho_max, None))],
        CheckName::Scaling => cfg
            .analysis
            .iota
            .iter()
            .map(|&i| named(scaling_residual_check(f, p, i, &dirs)))
            .collect(),
        CheckName::Lipschitz => vec![lipschitz_check(f)],
    }
}

fn report_file(rep: &AnalysisReport) -> String {
    match rep.parameters.get("iota") {
        Some(i) => format!("{}_iota{}.json", rep.check, *i as u32),
        None => format!("{}.json", rep.check),
    }
}

fn solve_cmd(cfg: &RunConfig, dir: &Path, analyze: bool) -> Result<bool> {
    let solved = solve_config(cfg, dir)?;
    write_field(&dir.join("field.csv"), &solved.field)?;
    let p = solved.params;
    let mut reports = vec![growth_report(&solved.field, &p, &default_radii(cfg))];
    if analyze {
        for &name in &cfg.analysis.checks {
            if name != CheckName::Growth {
                reports.extend(run_check(name, &solved.field, &p, cfg));
            }
        }
    }
    let requested: Vec<&AnalysisReport> = reports
        .iter()
        .filter(|r| analyze && (r.check != "growth" || cfg.analysis.checks.contains(&CheckName::Growth)))
        .collect();
    let passed = requested.iter().all(|r| r.passed);
    for rep in &reports {
        write_json(&dir.join("reports").join(report_file(rep)), rep)?;
    }
    let find = |check: &str, key: &str| {
        reports
            .iter()
            .find(|r| r.check == check)
            .and_then(|r| r.get(key))
    };
    let checks: BTreeMap<String, bool> = requested
        .iter()
        .map(|r| (report_file(r).trim_end_matches(".json").to_string(), r.passed))
        .collect();
    let summary = json!({
        "command": if analyze { "analyze" } else { "solve" },
        "alpha": p.alpha(),
        "alpha_est": find("growth", "alpha_est"),
        "C_emp": find("oscillation", "C_emp"),
        "c_emp": find("nondegeneracy", "c_emp"),
        "density_ratio_min": find("density", "density_ratio_min"),
        "porosity_tau": find("porosity", "porosity_tau"),
        "iterations": solved.iterations,
        "residual_sup": solved.residual_sup,
        "converged": true,
        "epsilon": p.epsilon(),
        "continuation": solved.continuation,
        "checks": checks,
        "passed": passed,
        "config": cfg,
    });
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(passed)
}

fn verify_barrier_cmd(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let p = cfg.params()?;
    let mut results = Vec::new();
    for &eta in &cfg.verify.etas {
        let rep = verify_supersolution(&BarrierSpec::new(eta, p)?, cfg.verify.samples)?;
        write_json(&dir.join("reports").join(format!("barrier_eta{eta}.json")), &rep)?;
        results.push(json!({ "eta": eta, "passed": rep.passed, "max_violation": rep.max_violation }));
    }
    let passed = results.iter().all(|r| r["passed"] == Value::Bool(true));
    write_json(
        &dir.join("summary.json"),
        &json!({
            "command": "verify-barrier",
            "alpha": p.alpha(),
            "delta": p.delta(),
            "barriers": results,
            "passed": passed,
            "config": cfg,
        }),
    )?;
    Ok(passed)
}

fn verify_radial_cmd(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let p = cfg.params()?;
    let n = cfg.verify.samples;
    let mut rows = Vec::new();
    let mut passed = true;
    for eps in cfg.epsilons() {
        let mut worst: (f64, f64) = (0.0, 0.0);
        for i in 0..n {
            let s = cfg.radius * i as f64 / (n - 1) as f64;
            let res = radial_ode_residual_with(s, eps, p.c_alpha(), &p)?;
            let rel = res.abs() / radial_profile(s, eps, &p).powf(-p.gamma());
            if rel > worst.0 {
                worst = (rel, s);
            }
        }
        let ok = worst.0 <= cfg.verify.radial_tol;
        passed &= ok;
        rows.push(json!({
            "epsilon": eps,
            "max_relative_residual": worst.0,
            "worst_radius": worst.1,
            "passed": ok,
        }));
    }
    write_json(&dir.join("reports").join("radial_identity.json"), &rows)?;
    write_json(
        &dir.join("summary.json"),
        &json!({
            "command": "verify-radial",
            "alpha": p.alpha(),
            "c_alpha": p.c_alpha(),
            "samples": n,
            "tolerance": cfg.verify.radial_tol,
            "results": rows,
            "passed": passed,
            "config": cfg,
        }),
    )?;
    Ok(passed)
}

fn sweep_cmd(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let mut table = BufWriter::new(File::create(dir.join("sweep.csv"))?);
    writeln!(table, "gamma,alpha,alpha_est,relative_error,min_r_squared")?;
    let mut rows = Vec::new();
    let mut passed = true;
    for &gamma in &cfg.sweep.gammas {
        let sub_cfg = cfg.with_gamma(gamma);
        let sub = dir.join(format!("gamma{gamma}"));
        fs::create_dir_all(&sub)?;
        let solved = solve_config(&sub_cfg, &sub)?;
        write_field(&sub.join("field.csv"), &solved.field)?;
        let rep = growth_report(&solved.field, &solved.params, &default_radii(&sub_cfg));
        write_json(&sub.join("growth.json"), &rep)?;
        let alpha = solved.params.alpha();
        let est = rep.get("alpha_est").unwrap_or(f64::NAN);
        let rel = rep.get("max_relative_error").unwrap_or(f64::NAN);
        let r2 = rep.get("min_r_squared").unwrap_or(f64::NAN);
        writeln!(table, "{gamma:.16e},{alpha:.16e},{est:.16e},{rel:.16e},{r2:.16e}")?;
        passed &= rep.passed;
        rows.push(json!({
            "gamma": gamma,
            "alpha": alpha,
            "alpha_est": rep.get("alpha_est"),
            "passed": rep.passed,
            "iterations": solved.iterations,
        }));
    }
    table.flush()?;
    write_json(
        &dir.join("summary.json"),
        &json!({ "command": "sweep", "rows": rows, "passed": passed, "config": cfg }),
    )?;
    Ok(passed)
}

use std::sync::Arc;

use inflap::discrete::{DirectionSet, Field, Geometry, Grid};
use inflap::solver::{
    make_subsolution, make_supersolution, solve_limit, solve_penalized, solve_penalized_from,
    BoundaryDatum, BoundarySpec, PenalizedProblem, Plateau, ProblemTemplate, SolveOptions, Sweep,
};
use inflap::derive_params;

fn newton() -> SolveOptions {
    SolveOptions {
        tol: 1e-12,
        max_iters: 5000,
        ..SolveOptions::newton()
    }
}

fn gauss_seidel() -> SolveOptions {
    SolveOptions {
        tol: 1e-12,
        sweep: Sweep::GaussSeidel,
        ..SolveOptions::default()
    }
}

fn plateau_problem(geometry: Geometry, h: f64) -> PenalizedProblem {
    let params = derive_params(0.5, 0.1, None).unwrap();
    let grid = Grid::plane(1.0, h, geometry, 1).unwrap();
    let spec = BoundarySpec::new(BoundaryDatum::Constant { value: 1.0 }).with_plateau(Plateau {
        center: [0.0, 0.0],
        radius: 0.25,
        value: 0.0,
    });
    ProblemTemplate::new(params, grid, DirectionSet::eight(), spec).problem().unwrap()
}

fn radial_problem(gamma: f64, h: f64) -> PenalizedProblem {
    let params = derive_params(gamma, 0.1, None).unwrap();
    let grid = Grid::interval(1.0, h).unwrap();
    let spec = BoundarySpec::new(BoundaryDatum::RadialCompat).pinned_origin();
    ProblemTemplate::new(params, grid, DirectionSet::line(), spec).problem().unwrap()
}

fn assert_between(lo: &Field, u: &Field, hi: &Field, slack: f64) {
    for k in 0..u.grid().len() {
        let (a, v, b) = (lo.get(k), u.get(k), hi.get(k));
        assert!(a <= v + slack && v <= b + slack, "node {k}: {a} <= {v} <= {b}");
    }
}

#[test]
fn solution_is_nonnegative_and_sandwiched() {
    for prob in [radial_problem(0.5, 0.02), plateau_problem(Geometry::Box, 1.0 / 16.0)] {
        let opts = newton();
        let sol = solve_penalized(&prob, &opts).unwrap();
        assert!(sol.converged);
        assert!(sol.field.min() >= 0.0);
        let sub = make_subsolution(&prob, &opts).unwrap();
        let sup = make_supersolution(&prob, &opts).unwrap();
        assert_between(&sub, &sol.field, &sup, 1e-9);
    }
}

#[test]
fn jacobi_iterates_increase_from_the_subsolution() {
    let prob = radial_problem(0.0, 0.05);
    let opts = SolveOptions {
        log_every: 1,
        ..SolveOptions::default()
    };
    let sol = solve_penalized(&prob, &opts).unwrap();
    assert!(sol.converged);
    assert!(sol.min_increment >= 0.0, "min increment {}", sol.min_increment);
    let reference = solve_penalized(&prob, &newton()).unwrap();
    assert!(sol.field.sup_distance(&reference.field) < 1e-7);
}

#[test]
fn minimal_solution_lies_below_the_one_reached_from_above() {
    let prob = plateau_problem(Geometry::Box, 1.0 / 16.0);
    let opts = gauss_seidel();
    let low = solve_penalized(&prob, &opts).unwrap();
    let sup = make_supersolution(&prob, &opts).unwrap();
    let high = solve_penalized_from(&prob, &sup, &opts).unwrap();
    assert!(low.converged && high.converged);
    for k in 0..prob.grid().len() {
        assert!(low.field.get(k) <= high.field.get(k) + 1e-9, "node {k}");
    }
    let nt = solve_penalized(&prob, &newton()).unwrap();
    assert!(nt.field.sup_distance(&low.field) < 1e-7);
}

#[test]
fn disk_solution_has_the_lattice_symmetries() {
    let prob = plateau_problem(Geometry::Disk, 1.0 / 16.0);
    let sol = solve_penalized(&prob, &newton()).unwrap();
    let grid = prob.grid();
    let [nx, ny] = grid.shape();
    let mut worst: f64 = 0.0;
    for k in 0..grid.len() {
        let [i, j] = grid.ij(k);
        let v = sol.field.get(k);
        for m in [grid.index(nx - 1 - i, j), grid.index(i, ny - 1 - j), grid.index(j, i)] {
            worst = worst.max((v - sol.field.get(m)).abs());
        }
    }
    assert!(worst <= 1e-8, "asymmetry {worst}");
}

#[test]
fn lifted_cone_is_recovered_when_the_penalty_is_saturated() {
    let params = derive_params(0.0, 0.1, None).unwrap();
    let c = params.c_alpha();
    let alpha = params.alpha();
    let exact = move |[x, _]: [f64; 2]| 1.0 + c * x.abs().powf(alpha);
    let mut prev = f64::INFINITY;
    for h in [0.02, 0.01, 0.005] {
        let grid = Arc::new(Grid::interval(1.0, h).unwrap());
        let prob = PenalizedProblem::from_fn(params, grid.clone(), DirectionSet::line(), exact).unwrap();
        let sol = solve_penalized(&prob, &newton()).unwrap();
        let err = sol.field.sup_distance(&Field::from_fn(grid, exact));
        assert!(err < 1e-2, "h = {h}: error {err}");
        assert!(err < prev, "h = {h}: error {err} did not decrease from {prev}");
        prev = err;
    }
}

#[test]
fn continuation_differences_shrink() {
    let params = derive_params(0.0, 0.1, None).unwrap();
    let grid = Grid::interval(1.0, 1.0 / 256.0).unwrap();
    let spec = BoundarySpec::new(BoundaryDatum::RadialLimit).pinned_origin();
    let template = ProblemTemplate::new(params, grid, DirectionSet::line(), spec);
    let (field, trace) = solve_limit(&template, &[0.1, 0.05, 0.025, 0.0125], &newton()).unwrap();
    assert_eq!(trace.sup_differences.len(), 3);
    assert!(trace.cauchy, "{:?}", trace.sup_differences);
    assert!(field.min() >= 0.0);
}

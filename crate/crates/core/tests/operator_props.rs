use std::sync::Arc;

use inflap::discrete::{discrete_inf_laplacian, DirectionSet, Field, Geometry, Grid};
use proptest::prelude::*;

fn setup(sixteen: bool) -> (Arc<Grid>, DirectionSet) {
    let dirs = if sixteen { DirectionSet::sixteen() } else { DirectionSet::eight() };
    let grid = Grid::plane(1.0, 0.25, Geometry::Box, dirs.reach()).unwrap();
    (Arc::new(grid), dirs)
}

fn field(grid: &Arc<Grid>, values: &[f64]) -> Field {
    Field::from_values(grid.clone(), values[..grid.len()].to_vec()).unwrap()
}

fn interior(grid: &Grid) -> Vec<usize> {
    grid.interior_nodes().collect()
}

fn lap(f: &Field, k: usize, dirs: &DirectionSet) -> f64 {
    discrete_inf_laplacian(f, k, dirs).unwrap()
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-10 * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn raising_a_neighbor_never_lowers_the_operator(
        sixteen: bool,
        values in prop::collection::vec(0.0f64..1.0, 81),
        pick in any::<prop::sample::Index>(),
        dir in any::<prop::sample::Index>(),
        bump in 1e-6f64..0.5,
    ) {
        let (grid, dirs) = setup(sixteen);
        let nodes = interior(&grid);
        let k = nodes[pick.index(nodes.len())];
        let f = field(&grid, &values);
        let off = dirs.offsets()[dir.index(dirs.len())];
        let n = grid.shifted(k, off).unwrap();
        let mut g = f.clone();
        g.values_mut()[n] += bump;
        let (before, after) = (lap(&f, k, &dirs), lap(&g, k, &dirs));
        prop_assert!(after >= before - 1e-12 * before.abs().max(1.0), "{before} -> {after}");
    }

    #[test]
    fn raising_the_center_never_raises_the_operator(
        sixteen: bool,
        values in prop::collection::vec(0.0f64..1.0, 81),
        pick in any::<prop::sample::Index>(),
        bump in 1e-6f64..0.5,
    ) {
        let (grid, dirs) = setup(sixteen);
        let nodes = interior(&grid);
        let k = nodes[pick.index(nodes.len())];
        let f = field(&grid, &values);
        let mut g = f.clone();
        g.values_mut()[k] += bump;
        let (before, after) = (lap(&f, k, &dirs), lap(&g, k, &dirs));
        prop_assert!(after <= before + 1e-12 * before.abs().max(1.0), "{before} -> {after}");
    }

    #[test]
    fn lattice_symmetries_commute_with_the_operator(
        sixteen: bool,
        values in prop::collection::vec(0.0f64..1.0, 81),
        pick in any::<prop::sample::Index>(),
        which in 0usize..3,
    ) {
        let (grid, dirs) = setup(sixteen);
        let [nx, ny] = grid.shape();
        let map = |k: usize| {
            let [i, j] = grid.ij(k);
            match which {
                0 => grid.index(nx - 1 - i, j),
                1 => grid.index(i, ny - 1 - j),
                _ => grid.index(j, i),
            }
        };
        let f = field(&grid, &values);
        let mut g = f.clone();
        for k in 0..grid.len() {
            g.values_mut()[map(k)] = f.get(k);
        }
        let nodes = interior(&grid);
        let k = nodes[pick.index(nodes.len())];
        let (a, b) = (lap(&f, k, &dirs), lap(&g, map(k), &dirs));
        prop_assert!(close(a, b, a.abs()), "{a} vs {b}");
    }

    #[test]
    fn cubic_scaling_and_shift_invariance(
        sixteen: bool,
        values in prop::collection::vec(0.0f64..1.0, 81),
        pick in any::<prop::sample::Index>(),
        c in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let (grid, dirs) = setup(sixteen);
        let nodes = interior(&grid);
        let k = nodes[pick.index(nodes.len())];
        let f = field(&grid, &values);
        let base = lap(&f, k, &dirs);
        let scaled = lap(&f.map(|v| c * v), k, &dirs);
        let shifted = lap(&f.map(|v| v + shift), k, &dirs);
        let expect = c.powi(3) * base;
        prop_assert!(close(scaled, expect, expect.abs()), "{scaled} vs {expect}");
        prop_assert!(close(shifted, base, base.abs()), "{shifted} vs {base}");
    }

    #[test]
    fn affine_fields_are_annihilated(
        sixteen: bool,
        a in -10.0f64..10.0,
        b in -10.0f64..10.0,
        c in -10.0f64..10.0,
    ) {
        let (grid, dirs) = setup(sixteen);
        let f = Field::from_fn(grid.clone(), |[x, y]| a * x + b * y + c);
        let scale = (a.abs() + b.abs() + c.abs()).powi(3) / grid.h();
        for k in interior(&grid) {
            let l = lap(&f, k, &dirs);
            prop_assert!(l.abs() <= 1e-12 * scale.max(1.0), "node {k}: {l}");
        }
    }
}

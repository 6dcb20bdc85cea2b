//! Min/max discretization of `Δ∞u = ⟨D²u Du, Du⟩`.
//!
//! Directions are grouped by length. For a class of offsets of length `a`
//! with largest neighbor `M` and smallest neighbor `m`, the one-sided slopes
//! at a node with value `u` are `(M − u)/a` and `(u − m)/a`. For an ascent
//! class `i` and a descent class `j`,
//!
//! ```text
//! p = (M_i − u)/a_i,   q = (u − m_j)/a_j,   ℓ = (a_i + a_j)/2
//! L_ij = (p − q)/ℓ · G(p, q),   G = max(p·q, (p² + q²)·2/5)
//! ```
//!
//! and the operator is `L = max_i min_j L_ij`. Each `L_ij` is nondecreasing
//! in `p` and nonincreasing in `q` on the whole plane, so `L` is continuous,
//! nonincreasing in the center value and nondecreasing in every neighbor.
//! For smooth data the steepest ascent and descent classes coincide and `L`
//! reduces to the second difference along the steepest direction times
//! `p·q ≈ |Du|²`. With a single class (1D, or the 4-neighbor cross) the
//! max-min is just `L_11`.

use rayon::prelude::*;

use crate::discrete::directions::DirectionSet;
use crate::discrete::field::Field;
use crate::discrete::grid::Grid;
use crate::error::{Error, Result};
use crate::model::ProblemParams;

/// Neighbor extrema around a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extrema {
    pub max: f64,
    pub min: f64,
    /// Euclidean length of the arg-max offset.
    pub len_max: f64,
    pub len_min: f64,
    pub arg_max: [i32; 2],
    pub arg_min: [i32; 2],
}

pub(crate) const MAX_CLASSES: usize = 3;

/// Extremes over the offsets of one length.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct ClassExtrema {
    pub(crate) max: f64,
    pub(crate) min: f64,
    pub(crate) len: f64,
    pub(crate) kmax: usize,
    pub(crate) kmin: usize,
}

/// Per-class extremes at one node; independent of the center value.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Neighborhood {
    pub(crate) classes: [ClassExtrema; MAX_CLASSES],
    pub(crate) n: usize,
}

impl Neighborhood {
    pub(crate) fn classes(&self) -> &[ClassExtrema] {
        &self.classes[..self.n]
    }

    /// Largest one-sided slope magnitude over all classes.
    pub(crate) fn steepness(&self, u: f64) -> f64 {
        self.classes()
            .iter()
            .map(|c| ((c.max - u) / c.len).abs().max(((u - c.min) / c.len).abs()))
            .fold(0.0, f64::max)
    }

    /// Shortest offset length.
    pub(crate) fn min_len(&self) -> f64 {
        self.classes().iter().map(|c| c.len).fold(f64::INFINITY, f64::min)
    }
}

/// `L`, `∂L/∂u` and the partials with respect to the two neighbors that
/// realize it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Eval {
    pub(crate) value: f64,
    pub(crate) d_u: f64,
    pub(crate) d_max: f64,
    pub(crate) d_min: f64,
    pub(crate) kmax: usize,
    pub(crate) kmin: usize,
}

#[derive(Clone, Debug)]
struct Class {
    len: f64,
    shifts: Vec<isize>,
}

/// Precomputed flat shifts for fast neighbor access on one grid.
#[derive(Clone, Debug)]
pub(crate) struct Kernel {
    shifts: Vec<isize>,
    lengths: Vec<f64>,
    offsets: Vec<[i32; 2]>,
    classes: Vec<Class>,
}

impl Kernel {
    pub(crate) fn new(grid: &Grid, dirs: &DirectionSet) -> Result<Kernel> {
        if dirs.dim() != grid.dim() {
            return Err(Error::Grid(format!(
                "{}D direction set on a {}D grid",
                dirs.dim(),
                grid.dim()
            )));
        }
        if dirs.reach() > grid.reach() {
            return Err(Error::Grid(format!(
                "stencil reach {} exceeds grid reach {}",
                dirs.reach(),
                grid.reach()
            )));
        }
        let shifts = dirs.linear_shifts(grid.shape()[0]);
        let lengths: Vec<f64> = dirs.lengths().iter().map(|l| l * grid.h()).collect();
        let mut classes: Vec<Class> = Vec::new();
        for (&s, &l) in shifts.iter().zip(&lengths) {
            match classes.iter_mut().find(|c| (c.len - l).abs() <= 1e-12 * l) {
                Some(c) => c.shifts.push(s),
                None => classes.push(Class { len: l, shifts: vec![s] }),
            }
        }
        classes.sort_by(|a, b| a.len.total_cmp(&b.len));
        assert!(classes.len() <= MAX_CLASSES, "too many offset lengths");
        Ok(Kernel {
            shifts,
            lengths,
            offsets: dirs.offsets().to_vec(),
            classes,
        })
    }

    /// Plain neighbor extrema. Ties keep the lexicographically first offset.
    pub(crate) fn extrema(&self, values: &[f64], k: usize) -> Extrema {
        let mut e = Extrema {
            max: f64::NEG_INFINITY,
            min: f64::INFINITY,
            len_max: 0.0,
            len_min: 0.0,
            arg_max: [0, 0],
            arg_min: [0, 0],
        };
        for (d, &s) in self.shifts.iter().enumerate() {
            let v = values[(k as isize + s) as usize];
            if v > e.max {
                e.max = v;
                e.len_max = self.lengths[d];
                e.arg_max = self.offsets[d];
            }
            if v < e.min {
                e.min = v;
                e.len_min = self.lengths[d];
                e.arg_min = self.offsets[d];
            }
        }
        e
    }

    #[inline]
    pub(crate) fn neighborhood(&self, values: &[f64], k: usize) -> Neighborhood {
        let mut nb = Neighborhood {
            n: self.classes.len(),
            ..Default::default()
        };
        for (slot, class) in nb.classes.iter_mut().zip(&self.classes) {
            let mut c = ClassExtrema {
                max: f64::NEG_INFINITY,
                min: f64::INFINITY,
                len: class.len,
                kmax: k,
                kmin: k,
            };
            for &s in &class.shifts {
                let n = (k as isize + s) as usize;
                let v = values[n];
                if v > c.max {
                    c.max = v;
                    c.kmax = n;
                }
                if v < c.min {
                    c.min = v;
                    c.kmin = n;
                }
            }
            *slot = c;
        }
        nb
    }

    /// Largest flat index distance to a stencil neighbor.
    pub(crate) fn bandwidth(&self) -> usize {
        self.shifts.iter().map(|s| s.unsigned_abs()).max().unwrap_or(0)
    }
}

/// `(p − q)·G(p, q)` with its partials in `p` and `q`.
#[inline]
pub(crate) fn slope_product(p: f64, q: f64) -> (f64, f64, f64) {
    let pq = p * q;
    let quad = 0.4 * (p * p + q * q);
    if pq >= quad {
        ((p - q) * pq, q * (2.0 * p - q), p * (p - 2.0 * q))
    } else {
        (
            (p - q) * quad,
            0.4 * (3.0 * p * p - 2.0 * p * q + q * q),
            -0.4 * (p * p - 2.0 * p * q + 3.0 * q * q),
        )
    }
}

#[inline]
fn pair(u: f64, up: &ClassExtrema, down: &ClassExtrema) -> Eval {
    let (a, b) = (up.len, down.len);
    let ell = 0.5 * (a + b);
    let p = (up.max - u) / a;
    let q = (u - down.min) / b;
    let (h, dp, dq) = slope_product(p, q);
    let d_max = dp / (a * ell);
    let d_min = -dq / (b * ell);
    Eval {
        value: h / ell,
        d_u: -d_max - d_min,
        d_max,
        d_min,
        kmax: up.kmax,
        kmin: down.kmin,
    }
}

/// `L` at center value `u`, with the partials of the active pair.
#[inline]
pub(crate) fn evaluate(u: f64, nb: &Neighborhood) -> Eval {
    let cls = nb.classes();
    let mut best: Option<Eval> = None;
    for up in cls {
        let mut inner: Option<Eval> = None;
        for down in cls {
            let e = pair(u, up, down);
            if inner.is_none_or(|i| e.value < i.value) {
                inner = Some(e);
            }
        }
        let inner = inner.expect("nonempty stencil");
        if best.is_none_or(|b| inner.value > b.value) {
            best = Some(inner);
        }
    }
    best.expect("nonempty stencil")
}

#[inline]
pub(crate) fn inf_laplacian_local(u: f64, nb: &Neighborhood) -> f64 {
    evaluate(u, nb).value
}

fn check_interior(f: &Field, node: usize) -> Result<()> {
    if node >= f.grid().len() || !f.grid().is_interior(node) {
        return Err(Error::NotInterior { node });
    }
    Ok(())
}

/// Max/min neighbor values at an interior node with their step lengths.
pub fn local_extrema(f: &Field, node: usize, dirs: &DirectionSet) -> Result<Extrema> {
    check_interior(f, node)?;
    let kernel = Kernel::new(f.grid(), dirs)?;
    Ok(kernel.extrema(f.values(), node))
}

/// Discrete `Δ∞f` at an interior node.
pub fn discrete_inf_laplacian(f: &Field, node: usize, dirs: &DirectionSet) -> Result<f64> {
    check_interior(f, node)?;
    let kernel = Kernel::new(f.grid(), dirs)?;
    Ok(inf_laplacian_local(f.get(node), &kernel.neighborhood(f.values(), node)))
}

/// `L_h f − source(f)` at interior nodes, zero on carriers.
pub(crate) fn residual_values(
    values: &[f64],
    grid: &Grid,
    kernel: &Kernel,
    source: &(dyn Fn(f64) -> f64 + Sync),
) -> Vec<f64> {
    let mask = grid.interior_mask();
    (0..values.len())
        .into_par_iter()
        .map(|k| {
            if mask[k] {
                inf_laplacian_local(values[k], &kernel.neighborhood(values, k)) - source(values[k])
            } else {
                0.0
            }
        })
        .collect()
}

/// Residual of the penalized equation; zero on boundary carriers.
pub fn residual_field(f: &Field, p: &ProblemParams, dirs: &DirectionSet) -> Result<Field> {
    let kernel = Kernel::new(f.grid(), dirs)?;
    let vals = residual_values(f.values(), f.grid(), &kernel, &|u| p.source(u.max(0.0)));
    Field::from_values(f.grid().clone(), vals)
}

/// Residual of `Δ∞u = 0`.
pub fn harmonic_residual_field(f: &Field, dirs: &DirectionSet) -> Result<Field> {
    let kernel = Kernel::new(f.grid(), dirs)?;
    let vals = residual_values(f.values(), f.grid(), &kernel, &|_| 0.0);
    Field::from_values(f.grid().clone(), vals)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::discrete::grid::Geometry;

    #[test]
    fn constant_field_extrema() {
        let g = Arc::new(Grid::plane(1.0, 0.25, Geometry::Box, 1).unwrap());
        let f = Field::from_fn(g.clone(), |_| 3.5);
        let e = local_extrema(&f, g.origin(), &DirectionSet::eight()).unwrap();
        assert_eq!((e.max, e.min), (3.5, 3.5));
        assert_eq!(discrete_inf_laplacian(&f, g.origin(), &DirectionSet::eight()).unwrap(), 0.0);
    }

    #[test]
    fn linear_extrema_1d_and_2d() {
        let g = Arc::new(Grid::interval(1.0, 0.1).unwrap());
        let f = Field::from_fn(g.clone(), |x| x[0]);
        let e = local_extrema(&f, g.origin(), &DirectionSet::line()).unwrap();
        assert!((e.max - 0.1).abs() < 1e-15 && (e.min + 0.1).abs() < 1e-15);
        assert_eq!((e.arg_max, e.arg_min), ([1, 0], [-1, 0]));

        let g = Arc::new(Grid::plane(4.0, 1.0, Geometry::Box, 1).unwrap());
        let f = Field::from_fn(g.clone(), |x| x[0] + x[1]);
        let e = local_extrema(&f, g.origin(), &DirectionSet::eight()).unwrap();
        assert_eq!((e.max, e.min), (2.0, -2.0));
        assert_eq!((e.arg_max, e.arg_min), ([1, 1], [-1, -1]));
        assert!((e.len_max - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ties_pick_lexicographic_first() {
        let g = Arc::new(Grid::plane(2.0, 1.0, Geometry::Box, 1).unwrap());
        let f = Field::from_fn(g.clone(), |x| x[0] * x[0]);
        let e = local_extrema(&f, g.origin(), &DirectionSet::eight()).unwrap();
        assert_eq!(e.arg_max, [-1, -1]);
        assert_eq!(e.arg_min, [0, -1]);
    }

    #[test]
    fn hand_case_square() {
        let g = Arc::new(Grid::interval(2.0, 0.1).unwrap());
        let f = Field::from_fn(g.clone(), |x| x[0] * x[0]);
        let node = g.nearest_node([1.0, 0.0]).unwrap();
        let v = discrete_inf_laplacian(&f, node, &DirectionSet::line()).unwrap();
        assert!((v - 7.98).abs() < 1e-10, "{v}");
    }

    #[test]
    fn rejects_carriers_and_mismatched_stencils() {
        let g = Arc::new(Grid::interval(1.0, 0.25).unwrap());
        let f = Field::zeros(g.clone());
        assert!(discrete_inf_laplacian(&f, 0, &DirectionSet::line()).is_err());
        assert!(discrete_inf_laplacian(&f, g.origin(), &DirectionSet::eight()).is_err());
        let g2 = Arc::new(Grid::plane(1.0, 0.25, Geometry::Box, 1).unwrap());
        let f2 = Field::zeros(g2.clone());
        assert!(discrete_inf_laplacian(&f2, g2.origin(), &DirectionSet::sixteen()).is_err());
    }

    fn one_class(max: f64, min: f64, len: f64) -> Neighborhood {
        let mut nb = Neighborhood { n: 1, ..Default::default() };
        nb.classes[0] = ClassExtrema { max, min, len, kmax: 1, kmin: 2 };
        nb
    }

    #[test]
    fn local_minimum_pushes_up_and_maximum_pushes_down() {
        let nb = one_class(1.0, 1.0, 0.1);
        assert!(inf_laplacian_local(0.9, &nb) > 0.0);
        assert!(inf_laplacian_local(1.1, &nb) < 0.0);
    }

    #[test]
    fn slope_product_is_monotone_everywhere() {
        let vals = [-3.0, -1.0, -0.4, -0.1, 0.0, 0.1, 0.3, 0.5, 1.0, 1.9, 2.1, 4.0];
        for &p in &vals {
            for &q in &vals {
                let (_, dp, dq) = slope_product(p, q);
                assert!(dp >= -1e-15 && dq <= 1e-15, "p {p} q {q}: {dp} {dq}");
            }
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let mut nb = Neighborhood { n: 2, ..Default::default() };
        nb.classes[0] = ClassExtrema { max: 1.1, min: 0.3, len: 0.1, kmax: 1, kmin: 2 };
        nb.classes[1] = ClassExtrema { max: 1.3, min: 0.2, len: 0.1 * 2f64.sqrt(), kmax: 3, kmin: 4 };
        let hh = 1e-7;
        for u in [0.0, 0.25, 0.5, 0.7, 0.9, 1.2, 1.5] {
            let e = evaluate(u, &nb);
            let fd = (inf_laplacian_local(u + hh, &nb) - inf_laplacian_local(u - hh, &nb)) / (2.0 * hh);
            assert!((e.d_u - fd).abs() <= 1e-5 * fd.abs().max(1.0), "u {u}: {} vs {fd}", e.d_u);
            assert!(e.d_u <= 0.0 && e.d_max >= 0.0 && e.d_min >= 0.0);
            let bump = |node: usize, d: f64| {
                let mut m = nb;
                for c in m.classes.iter_mut() {
                    if c.kmax == node {
                        c.max += d;
                    }
                    if c.kmin == node {
                        c.min += d;
                    }
                }
                inf_laplacian_local(u, &m)
            };
            let fd_max = (bump(e.kmax, hh) - bump(e.kmax, -hh)) / (2.0 * hh);
            let fd_min = (bump(e.kmin, hh) - bump(e.kmin, -hh)) / (2.0 * hh);
            assert!((e.d_max - fd_max).abs() <= 1e-5 * fd_max.abs().max(1.0), "u {u}");
            assert!((e.d_min - fd_min).abs() <= 1e-5 * fd_min.abs().max(1.0), "u {u}");
        }
    }

    #[test]
    fn affine_fields_vanish_in_every_direction() {
        let g = Arc::new(Grid::plane(2.0, 0.25, Geometry::Box, 2).unwrap());
        for (a, b) in [(1.0, 0.0), (0.3, -0.7), (1.0, 1.0), (2.0, 1.0)] {
            let f = Field::from_fn(g.clone(), |x| a * x[0] + b * x[1] + 0.5);
            for dirs in [DirectionSet::eight(), DirectionSet::sixteen()] {
                let v = discrete_inf_laplacian(&f, g.origin(), &dirs).unwrap();
                assert!(v.abs() < 1e-12, "{a} {b}: {v}");
            }
        }
    }
}

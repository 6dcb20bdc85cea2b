use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Domain shape in 2D. 1D grids are always intervals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Box,
    Disk,
}

/// Uniform lattice centered at the origin, `x = (i − c)·h` per axis.
///
/// Nodes are either interior (unknowns) or boundary carriers holding
/// Dirichlet data. Carriers include the lattice rim, everything outside the
/// disk for [`Geometry::Disk`], and any pinned interior nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    h: f64,
    radius: f64,
    geometry: Geometry,
    shape: [usize; 2],
    center: [usize; 2],
    reach: usize,
    interior: Vec<bool>,
}

fn half_count(radius: f64, h: f64) -> Result<usize> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Grid(format!("spacing h = {h} must be positive")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Grid(format!("radius R = {radius} must be positive")));
    }
    let ratio = radius / h;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 2.0 {
        return Err(Error::Grid(format!(
            "R/h = {ratio} must be an integer >= 2 so that the origin and the rim are nodes"
        )));
    }
    Ok(n as usize)
}

impl Grid {
    /// `[−R, R]` with spacing `h`; the two end nodes carry boundary data.
    pub fn interval(radius: f64, h: f64) -> Result<Grid> {
        let n = half_count(radius, h)?;
        let len = 2 * n + 1;
        let mut interior = vec![true; len];
        interior[0] = false;
        interior[len - 1] = false;
        Ok(Grid {
            dim: 1,
            h,
            radius,
            geometry: Geometry::Box,
            shape: [len, 1],
            center: [n, 0],
            reach: 1,
            interior,
        })
    }

    /// Square `[−R, R]²` or disk `|x| < R` lattice for stencils of the given reach.
    ///
    /// For the box, the outermost `reach` layers are carriers. For the disk the
    /// lattice is padded so every node inside the open disk sees all its
    /// stencil neighbors.
    pub fn plane(radius: f64, h: f64, geometry: Geometry, reach: usize) -> Result<Grid> {
        let n = half_count(radius, h)?;
        if reach == 0 || reach >= n {
            return Err(Error::Grid(format!("stencil reach {reach} incompatible with R/h = {n}")));
        }
        let half = match geometry {
            Geometry::Box => n,
            Geometry::Disk => n + reach - 1,
        };
        let side = 2 * half + 1;
        let mut interior = vec![false; side * side];
        let r2 = (n * n) as i64;
        for j in 0..side {
            for i in 0..side {
                let (di, dj) = (i as i64 - half as i64, j as i64 - half as i64);
                interior[i + j * side] = match geometry {
                    Geometry::Box => {
                        let lim = (n - reach) as i64;
                        di.abs() <= lim && dj.abs() <= lim
                    }
                    Geometry::Disk => di * di + dj * dj < r2,
                };
            }
        }
        Ok(Grid {
            dim: 2,
            h,
            radius,
            geometry,
            shape: [side, side],
            center: [half, half],
            reach,
            interior,
        })
    }

    /// Turns every interior node whose position satisfies `pred` into a carrier.
    pub fn with_pinned(mut self, pred: impl Fn([f64; 2]) -> bool) -> Grid {
        for k in 0..self.len() {
            if self.interior[k] && pred(self.coords(k)) {
                self.interior[k] = false;
            }
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn geometry(&self) -> Geometry {
        self.geometry
    }
    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }
    pub fn reach(&self) -> usize {
        self.reach
    }
    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_interior(&self, k: usize) -> bool {
        self.interior[k]
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.interior[k])
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| !self.interior[k])
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * self.shape[0]
    }

    /// Lattice coordinates `(i, j)` of node `k`.
    pub fn ij(&self, k: usize) -> [usize; 2] {
        [k % self.shape[0], k / self.shape[0]]
    }

    /// Integer offsets of node `k` from the origin node.
    pub fn offset_of(&self, k: usize) -> [i64; 2] {
        let [i, j] = self.ij(k);
        [i as i64 - self.center[0] as i64, j as i64 - self.center[1] as i64]
    }

    /// Position; `y = 0` on 1D grids.
    pub fn coords(&self, k: usize) -> [f64; 2] {
        let [di, dj] = self.offset_of(k);
        [di as f64 * self.h, dj as f64 * self.h]
    }

    pub fn norm(&self, k: usize) -> f64 {
        let [x, y] = self.coords(k);
        x.hypot(y)
    }

    /// Node at integer offset from the origin, if on the lattice.
    pub fn node_at_offset(&self, off: [i64; 2]) -> Option<usize> {
        let i = off[0] + self.center[0] as i64;
        let j = off[1] + self.center[1] as i64;
        if i < 0 || j < 0 || i >= self.shape[0] as i64 || j >= self.shape[1] as i64 {
            None
        } else {
            Some(self.index(i as usize, j as usize))
        }
    }

    /// Node shifted by a lattice offset.
    pub fn shifted(&self, k: usize, d: [i32; 2]) -> Option<usize> {
        let [di, dj] = self.offset_of(k);
        self.node_at_offset([di + d[0] as i64, dj + d[1] as i64])
    }

    /// Nearest lattice node to a position.
    pub fn nearest_node(&self, x: [f64; 2]) -> Option<usize> {
        let i = (x[0] / self.h).round() as i64;
        let j = if self.dim == 1 { 0 } else { (x[1] / self.h).round() as i64 };
        self.node_at_offset([i, j])
    }

    pub fn origin(&self) -> usize {
        self.index(self.center[0], self.center[1])
    }

    /// Nodes with `|node − center| ≤ r`, scanning only the bounding box.
    pub fn nodes_in_ball(&self, center: usize, r: f64) -> impl Iterator<Item = usize> + '_ {
        let [ci, cj] = self.ij(center);
        let m = (r / self.h).floor().max(0.0) as usize;
        let rr = (r / self.h) * (r / self.h) * (1.0 + 1e-12);
        let (i0, i1) = (ci.saturating_sub(m), (ci + m).min(self.shape[0] - 1));
        let (j0, j1) = if self.dim == 1 {
            (0, 0)
        } else {
            (cj.saturating_sub(m), (cj + m).min(self.shape[1] - 1))
        };
        (j0..=j1).flat_map(move |j| {
            (i0..=i1).filter_map(move |i| {
                let (di, dj) = (i as f64 - ci as f64, j as f64 - cj as f64);
                (di * di + dj * dj <= rr).then(|| self.index(i, j))
            })
        })
    }

    /// Carriers adjacent (within stencil reach) to some interior node.
    pub fn active_boundary(&self) -> Vec<usize> {
        let reach = self.reach as i32;
        let ny_reach = if self.dim == 1 { 0 } else { reach };
        self.boundary_nodes()
            .filter(|&k| {
                (-ny_reach..=ny_reach).any(|dj| {
                    (-reach..=reach).any(|di| {
                        self.shifted(k, [di, dj]).is_some_and(|n| self.interior[n])
                    })
                })
            })
            .collect()
    }

    /// Euclidean distance from every node to the nearest active carrier.
    pub fn boundary_distance(&self) -> Vec<f64> {
        let frontier: Vec<[f64; 2]> = self.active_boundary().iter().map(|&k| self.coords(k)).collect();
        (0..self.len())
            .map(|k| {
                let [x, y] = self.coords(k);
                frontier
                    .iter()
                    .map(|b| (b[0] - x).hypot(b[1] - y))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_layout() {
        let g = Grid::interval(1.0, 0.25).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.coords(g.origin()), [0.0, 0.0]);
        assert_eq!(g.coords(0), [-1.0, 0.0]);
        assert_eq!(g.coords(8), [1.0, 0.0]);
        assert_eq!(g.interior_nodes().count(), 7);
        assert!(Grid::interval(1.0, 0.3).is_err());
    }

    #[test]
    fn disk_interior_has_full_stencil() {
        for reach in [1, 2] {
            let g = Grid::plane(1.0, 0.125, Geometry::Disk, reach).unwrap();
            for k in g.interior_nodes() {
                assert!(g.norm(k) < 1.0);
                for dj in -(reach as i32)..=reach as i32 {
                    for di in -(reach as i32)..=reach as i32 {
                        assert!(g.shifted(k, [di, dj]).is_some());
                    }
                }
            }
        }
    }

    #[test]
    fn box_boundary_layers() {
        let g = Grid::plane(1.0, 0.25, Geometry::Box, 2).unwrap();
        assert_eq!(g.shape(), [9, 9]);
        assert_eq!(g.interior_nodes().count(), 25);
        let g = Grid::plane(1.0, 0.25, Geometry::Box, 1).unwrap();
        assert_eq!(g.interior_nodes().count(), 49);
    }

    #[test]
    fn pinning_and_balls() {
        let g = Grid::plane(1.0, 0.125, Geometry::Box, 1)
            .unwrap()
            .with_pinned(|x| x[0].hypot(x[1]) <= 0.25);
        assert!(!g.is_interior(g.origin()));
        let ball: Vec<_> = g.nodes_in_ball(g.origin(), 0.125).collect();
        assert_eq!(ball.len(), 5);
        let d = g.boundary_distance();
        assert_eq!(d[g.origin()], 0.125);
        let one_d = Grid::interval(1.0, 0.125).unwrap();
        assert_eq!(one_d.nodes_in_ball(one_d.origin(), 0.3).count(), 5);
    }
}

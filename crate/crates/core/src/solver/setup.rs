use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::closed_forms::{radial_exact, radial_limit};
use crate::discrete::{DirectionSet, Grid};
use crate::error::{Error, Result};
use crate::model::ProblemParams;
use crate::solver::PenalizedProblem;

/// Dirichlet data on carriers.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryDatum {
    /// `C_α (|x|+ε)^α`, compatible with the exact radial solution at the current ε.
    RadialCompat,
    /// `C_α |x|^α`, independent of ε.
    RadialLimit,
    Constant { value: f64 },
    /// One value per node in grid order.
    Tabulated {
        #[serde(skip)]
        values: Vec<f64>,
    },
}

/// Interior region pinned to a fixed value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plateau {
    pub center: [f64; 2],
    pub radius: f64,
    pub value: f64,
}

impl Plateau {
    fn contains(&self, x: [f64; 2]) -> bool {
        (x[0] - self.center[0]).hypot(x[1] - self.center[1]) <= self.radius * (1.0 + 1e-12)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundarySpec {
    pub datum: BoundaryDatum,
    /// Turn the origin into a carrier holding the datum value there.
    pub pin_origin: bool,
    pub plateaus: Vec<Plateau>,
}

impl BoundarySpec {
    pub fn new(datum: BoundaryDatum) -> Self {
        BoundarySpec {
            datum,
            pin_origin: false,
            plateaus: Vec::new(),
        }
    }

    pub fn pinned_origin(mut self) -> Self {
        self.pin_origin = true;
        self
    }

    pub fn with_plateau(mut self, plateau: Plateau) -> Self {
        self.plateaus.push(plateau);
        self
    }

    /// Applies the pins of this spec to a grid.
    pub fn pin(&self, grid: Grid) -> Grid {
        let pin_origin = self.pin_origin;
        let plateaus = self.plateaus.clone();
        grid.with_pinned(move |x| {
            (pin_origin && x[0] == 0.0 && x[1] == 0.0) || plateaus.iter().any(|p| p.contains(x))
        })
    }

    /// Carrier values on `grid` at parameters `p`; interior entries are zero.
    pub fn values(&self, grid: &Grid, p: &ProblemParams) -> Result<Vec<f64>> {
        if let BoundaryDatum::Tabulated { values } = &self.datum {
            if values.len() != grid.len() {
                return Err(Error::Grid(format!(
                    "tabulated boundary has {} values for {} nodes",
                    values.len(),
                    grid.len()
                )));
            }
        }
        Ok((0..grid.len())
            .map(|k| {
                if grid.is_interior(k) {
                    return 0.0;
                }
                let x = grid.coords(k);
                if let Some(pl) = self.plateaus.iter().find(|pl| pl.contains(x)) {
                    return pl.value;
                }
                let r = x[0].hypot(x[1]);
                match &self.datum {
                    BoundaryDatum::RadialCompat => radial_exact(r, p),
                    BoundaryDatum::RadialLimit => radial_limit(r, p),
                    BoundaryDatum::Constant { value } => *value,
                    BoundaryDatum::Tabulated { values } => values[k],
                }
            })
            .collect())
    }
}

/// Everything but ε: grid, stencil, parameters and boundary recipe.
#[derive(Clone, Debug)]
pub struct ProblemTemplate {
    pub params: ProblemParams,
    pub grid: Arc<Grid>,
    pub dirs: DirectionSet,
    pub boundary: BoundarySpec,
}

impl ProblemTemplate {
    /// Pins `grid` according to `boundary`.
    pub fn new(params: ProblemParams, grid: Grid, dirs: DirectionSet, boundary: BoundarySpec) -> Self {
        let grid = Arc::new(boundary.pin(grid));
        ProblemTemplate {
            params,
            grid,
            dirs,
            boundary,
        }
    }

    /// The problem at the template's own ε.
    pub fn problem(&self) -> Result<PenalizedProblem> {
        self.build(self.params)
    }

    pub fn instantiate(&self, epsilon: f64) -> Result<PenalizedProblem> {
        self.build(self.params.with_epsilon(epsilon)?)
    }

    fn build(&self, params: ProblemParams) -> Result<PenalizedProblem> {
        let values = self.boundary.values(&self.grid, &params)?;
        PenalizedProblem::new(params, self.grid.clone(), values, self.dirs.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::Geometry;
    use crate::model::derive_params;

    #[test]
    fn origin_pin_and_plateau_values() {
        let p = derive_params(0.0, 0.1, None).unwrap();
        let spec = BoundarySpec::new(BoundaryDatum::RadialCompat).pinned_origin();
        let t = ProblemTemplate::new(p, Grid::interval(1.0, 0.125).unwrap(), DirectionSet::line(), spec);
        let prob = t.problem().unwrap();
        let o = t.grid.origin();
        assert!(!t.grid.is_interior(o));
        assert!((prob.boundary()[o] - p.c_alpha() * 0.1f64.powf(p.alpha())).abs() < 1e-15);
        assert!((prob.upper_bound() - p.c_alpha() * 1.1f64.powf(p.alpha())).abs() < 1e-14);

        let spec = BoundarySpec::new(BoundaryDatum::Constant { value: 1.0 }).with_plateau(Plateau {
            center: [0.0, 0.0],
            radius: 0.25,
            value: 0.0,
        });
        let g = Grid::plane(1.0, 0.125, Geometry::Box, 1).unwrap();
        let t = ProblemTemplate::new(p, g, DirectionSet::eight(), spec);
        let prob = t.problem().unwrap();
        assert_eq!(t.grid.interior_nodes().count(), 225 - 13);
        assert_eq!(prob.boundary()[t.grid.origin()], 0.0);
        assert_eq!(prob.boundary()[0], 1.0);
    }

    #[test]
    fn tabulated_length_is_checked() {
        let p = derive_params(0.0, 0.1, None).unwrap();
        let spec = BoundarySpec::new(BoundaryDatum::Tabulated { values: vec![1.0; 3] });
        let t = ProblemTemplate::new(p, Grid::interval(1.0, 0.25).unwrap(), DirectionSet::line(), spec);
        assert!(t.problem().is_err());
    }
}

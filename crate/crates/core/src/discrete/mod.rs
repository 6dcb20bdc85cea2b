//! Uniform lattices, nodal fields and the monotone infinity-Laplacian stencil.

pub mod directions;
pub mod field;
pub mod grid;
pub mod operator;

pub use directions::{DirectionSet, Stencil};
pub use field::Field;
pub use grid::{Geometry, Grid};
pub use operator::{
    discrete_inf_laplacian, harmonic_residual_field, local_extrema, residual_field, Extrema,
};

//! Numerical laboratory for the penalized singular infinity-Laplacian problem
//!
//! ```text
//! Δ∞u = B_ε(u) u^(−γ)  in Ω,     u = φ_ε  on ∂Ω,
//! ```
//!
//! with growth exponent `α = 4/(3+γ)`. The crate provides the parameter model,
//! exact radial solutions and barriers, a monotone finite-difference scheme,
//! a minimal-solution solver with ε-continuation, and empirical checks of the
//! free-boundary estimates (growth, non-degeneracy, density, porosity).

pub mod analysis;
pub mod closed_forms;
pub mod cli;
pub mod discrete;
pub mod error;
pub mod model;
pub mod solver;

pub use error::{Error, Result};
pub use model::{derive_params, max_admissible_delta, ProblemParams, RampShape};
